//! Discrete c-transform for the cost c(x,p) = <x,p> between two sample
//! clouds: conjugation, the closed class, projection onto it, and the
//! ambient extension of a closed potential.

use thiserror::Error;

use crate::mesh::SampleCloud;
use crate::polytope::Side;

pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("sample cloud for side {0} is empty")]
    EmptyCloud(&'static str),
    #[error("potential side {found} does not match expected side {expected}")]
    SideMismatch {
        found: &'static str,
        expected: &'static str,
    },
    #[error("potential is not c-closed (max defect {0:e})")]
    NotClosed(f64),
}

/// A potential sampled on one cloud.
#[derive(Clone, Debug)]
pub struct Potential {
    pub side: Side,
    pub values: Vec<f64>,
    /// set once the vector is known to equal its double conjugate
    pub c_closed: bool,
}

impl Potential {
    pub fn new(side: Side, values: Vec<f64>) -> Self {
        Potential {
            side,
            values,
            c_closed: false,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate of `f` (on `source`) as a potential on `target`:
/// `g(p) = max_x <x,p> - f(x)`, ties resolved to the lowest sample index.
/// Also returns the argmax index per target point.
pub fn c_transform(
    f: &Potential,
    source: &SampleCloud,
    target: &SampleCloud,
) -> Result<(Potential, Vec<usize>), TransformError> {
    if source.points.is_empty() {
        return Err(TransformError::EmptyCloud(source.side.tag()));
    }
    if target.points.is_empty() {
        return Err(TransformError::EmptyCloud(target.side.tag()));
    }
    if f.side != source.side {
        return Err(TransformError::SideMismatch {
            found: f.side.tag(),
            expected: source.side.tag(),
        });
    }
    assert_eq!(f.values.len(), source.points.len());
    let mut values = Vec::with_capacity(target.points.len());
    let mut arg = Vec::with_capacity(target.points.len());
    for q in &target.points {
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, x) in source.points.iter().enumerate() {
            let v = dot(&x.position, &q.position) - f.values[i];
            if v > best {
                best = v;
                best_i = i;
            }
        }
        values.push(best);
        arg.push(best_i);
    }
    Ok((
        Potential {
            side: target.side,
            values,
            c_closed: true,
        },
        arg,
    ))
}

/// Largest defect `|f - f^cc|` (f^cc <= f always holds pointwise).
pub fn closure_defect(
    f: &Potential,
    source: &SampleCloud,
    target: &SampleCloud,
) -> Result<f64, TransformError> {
    let (fc, _) = c_transform(f, source, target)?;
    let (fcc, _) = c_transform(&fc, target, source)?;
    Ok(f
        .values
        .iter()
        .zip(&fcc.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn is_c_closed(
    f: &Potential,
    source: &SampleCloud,
    target: &SampleCloud,
) -> Result<bool, TransformError> {
    Ok(closure_defect(f, source, target)? <= CLOSURE_TOL)
}

/// Double conjugate: the largest closed minorant of `f`.
pub fn project_to_class(
    f: &Potential,
    source: &SampleCloud,
    target: &SampleCloud,
) -> Result<Potential, TransformError> {
    let (fc, _) = c_transform(f, source, target)?;
    let (mut fcc, _) = c_transform(&fc, target, source)?;
    fcc.c_closed = true;
    Ok(fcc)
}

/// Extension of a closed potential to all of R^D via the conjugate values
/// on the opposite cloud: `F(x) = max_q <x,q> - f^c(q)`. Convex by
/// construction and equal to `f` on the source samples when `f` is closed.
#[derive(Clone, Debug)]
pub struct AmbientExtension {
    pub side: Side,
    /// opposite-cloud sample positions
    pub slopes: Vec<Vec<f64>>,
    /// intercepts -f^c(q)
    pub intercepts: Vec<f64>,
}

impl AmbientExtension {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(q, b)| dot(q, x) + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the supporting affine piece at `x` (lowest on ties).
    pub fn active_piece(&self, x: &[f64]) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, (q, b)) in self.slopes.iter().zip(&self.intercepts).enumerate() {
            let v = dot(q, x) + b;
            if v > best {
                best = v;
                best_i = i;
            }
        }
        best_i
    }
}

pub fn extend_to_ambient(
    f: &Potential,
    source: &SampleCloud,
    target: &SampleCloud,
) -> Result<AmbientExtension, TransformError> {
    let defect = closure_defect(f, source, target)?;
    if defect > CLOSURE_TOL {
        return Err(TransformError::NotClosed(defect));
    }
    let (fc, _) = c_transform(f, source, target)?;
    Ok(AmbientExtension {
        side: f.side,
        slopes: target.points.iter().map(|p| p.position.clone()).collect(),
        intercepts: fc.values.iter().map(|v| -v).collect(),
    })
}

/// CSV dump of a potential over its cloud.
pub fn potential_to_csv(f: &Potential) -> String {
    let mut s = String::from("index,value\n");
    for (i, v) in f.values.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", crate::report::fmt_f64(*v)));
    }
    s
}
