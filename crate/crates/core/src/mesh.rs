//! Boundary sampling: refine each facet's triangulation by red subdivision
//! and place one weighted sample at the barycenter of every cell. Weights
//! are exact cell lattice measures divided once by the total boundary
//! measure, so each cloud is a probability measure; multiply by
//! `total_lattice_measure` to recover raw lattice units. All refinement is
//! exact; f64 enters only in the published `position`/`weight` fields
//! consumed by the solvers.

use num::traits::Zero;
use thiserror::Error;

use crate::linalg::{rat_i, rat_to_f64, Rat};
use crate::polytope::{
    simplex_lattice_measure, BoundaryComplex, GeometryError, RationalVector, Side,
};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("boundary has zero total lattice measure; nothing to sample")]
    ZeroMeasureBoundary,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One weighted sample on a boundary facet.
#[derive(Clone, Debug)]
pub struct SamplePoint {
    /// f64 view of `pos`, used by the solvers
    pub position: Vec<f64>,
    pub pos: RationalVector,
    /// facet index in the source complex
    pub facet: usize,
    /// index of the depth-0 triangulation simplex this cell descends from
    pub root_simplex: usize,
    /// f64 view of `weight_rat`
    pub weight: f64,
    pub weight_rat: Rat,
}

#[derive(Clone, Debug)]
pub struct SampleCloud {
    pub side: Side,
    pub dim: usize,
    pub depth: usize,
    pub points: Vec<SamplePoint>,
    /// max cell diameter estimate: max edge length over all refined cells
    pub h: f64,
    pub total_lattice_measure: Rat,
}

impl SampleCloud {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

fn midpoint(a: &RationalVector, b: &RationalVector) -> RationalVector {
    a.add(b).scale(&crate::linalg::rat(1, 2))
}

/// Red refinement of a k-simplex (k = cell dimension = D-1):
/// k=1 splits an edge in 2, k=2 a triangle in 4, k=3 a tetrahedron in 8
/// (Freudenthal split of the inner octahedron along the 05 diagonal).
fn red_refine(cell: &[RationalVector]) -> Vec<Vec<RationalVector>> {
    match cell.len() {
        2 => {
            let m = midpoint(&cell[0], &cell[1]);
            vec![
                vec![cell[0].clone(), m.clone()],
                vec![m, cell[1].clone()],
            ]
        }
        3 => {
            let m01 = midpoint(&cell[0], &cell[1]);
            let m02 = midpoint(&cell[0], &cell[2]);
            let m12 = midpoint(&cell[1], &cell[2]);
            vec![
                vec![cell[0].clone(), m01.clone(), m02.clone()],
                vec![m01.clone(), cell[1].clone(), m12.clone()],
                vec![m02.clone(), m12.clone(), cell[2].clone()],
                vec![m01, m12, m02],
            ]
        }
        4 => {
            let m: Vec<Vec<RationalVector>> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| midpoint(&cell[i], &cell[j]))
                        .collect()
                })
                .collect();
            let mut out = vec![
                vec![cell[0].clone(), m[0][1].clone(), m[0][2].clone(), m[0][3].clone()],
                vec![m[0][1].clone(), cell[1].clone(), m[1][2].clone(), m[1][3].clone()],
                vec![m[0][2].clone(), m[1][2].clone(), cell[2].clone(), m[2][3].clone()],
                vec![m[0][3].clone(), m[1][3].clone(), m[2][3].clone(), cell[3].clone()],
            ];
            // octahedron m01 m02 m03 m12 m13 m23, diagonal m02-m13
            let (a, b) = (m[0][2].clone(), m[1][3].clone());
            out.push(vec![a.clone(), b.clone(), m[0][1].clone(), m[0][3].clone()]);
            out.push(vec![a.clone(), b.clone(), m[0][1].clone(), m[1][2].clone()]);
            out.push(vec![a.clone(), b.clone(), m[2][3].clone(), m[0][3].clone()]);
            out.push(vec![a, b, m[2][3].clone(), m[1][2].clone()]);
            out
        }
        _ => unreachable!("cell dimension outside 1..=3"),
    }
}

fn barycenter(cell: &[RationalVector]) -> RationalVector {
    let n = rat_i(cell.len() as i64);
    let mut acc = vec![Rat::zero(); cell[0].dim()];
    for p in cell {
        for (a, x) in acc.iter_mut().zip(&p.0) {
            *a += x;
        }
    }
    RationalVector(acc.into_iter().map(|x| x / &n).collect())
}

fn edge_len_sq(a: &RationalVector, b: &RationalVector) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| {
            let d = rat_to_f64(x) - rat_to_f64(y);
            d * d
        })
        .sum()
}

/// Sample a boundary complex at the given refinement depth. Cells are
/// emitted facet by facet, root simplex by root simplex, in refinement
/// order, so the output is deterministic.
pub fn triangulate_refine(
    complex: &BoundaryComplex,
    depth: usize,
) -> Result<SampleCloud, MeshError> {
    if complex.total_lattice_measure.is_zero() {
        return Err(MeshError::ZeroMeasureBoundary);
    }
    let mut points = Vec::new();
    let mut h_sq: f64 = 0.0;
    for (fi, facet) in complex.facets.iter().enumerate() {
        for (ri, root) in facet.triangulation.iter().enumerate() {
            let mut cells = vec![root.clone()];
            for _ in 0..depth {
                let mut next = Vec::with_capacity(cells.len() * 4);
                for c in &cells {
                    next.extend(red_refine(c));
                }
                cells = next;
            }
            for cell in cells {
                let w = simplex_lattice_measure(&cell, &facet.label)?
                    / &complex.total_lattice_measure;
                if w.is_zero() {
                    continue;
                }
                for i in 0..cell.len() {
                    for j in i + 1..cell.len() {
                        h_sq = h_sq.max(edge_len_sq(&cell[i], &cell[j]));
                    }
                }
                let pos = barycenter(&cell);
                points.push(SamplePoint {
                    position: pos.to_f64(),
                    pos,
                    facet: fi,
                    root_simplex: ri,
                    weight: rat_to_f64(&w),
                    weight_rat: w,
                });
            }
        }
    }
    if points.is_empty() {
        return Err(MeshError::ZeroMeasureBoundary);
    }
    Ok(SampleCloud {
        side: complex.side,
        dim: complex.dim,
        depth,
        points,
        h: h_sq.sqrt(),
        total_lattice_measure: complex.total_lattice_measure.clone(),
    })
}

/// CSV dump: header then one row per sample. `labels[facet]` is the facet's
/// defining lattice vector.
pub fn cloud_to_csv(cloud: &SampleCloud, complex: &BoundaryComplex) -> String {
    let dim = cloud.dim;
    let mut s = String::new();
    s.push_str("index,side,facet_label");
    for d in 0..dim {
        s.push_str(&format!(",x{d}"));
    }
    s.push_str(",facet,root_simplex,weight\n");
    for (i, p) in cloud.points.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},\"{}\"",
            cloud.side.tag(),
            complex.facets[p.facet].label
        ));
        for c in &p.position {
            s.push_str(&format!(",{}", crate::report::fmt_f64(*c)));
        }
        s.push_str(&format!(
            ",{},{},{}\n",
            p.facet,
            p.root_simplex,
            crate::report::fmt_f64(p.weight)
        ));
    }
    s
}
