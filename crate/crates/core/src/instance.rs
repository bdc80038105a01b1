//! Instance files: a TOML document describing a weighted reflexive pair.
//!
//! ```toml
//! dimension = 2
//! delta_vertices = [[1, 0], [0, 1], [-1, -1]]
//! # optional; validated against the computed dual when present. Supplying
//! # it fixes the vertex order that the [mu] table is keyed by.
//! dual_vertices = [[1, 1], [1, -2], [-2, 1]]
//!
//! # weights are exact rationals ("p/q" or "p"), keyed by vertex index.
//! # omitting a whole table means weight -1 everywhere; a partially filled
//! # table is an error.
//! [lambda]
//! 0 = "-1"
//! 1 = "-1"
//! 2 = "-3/2"
//! ```

use serde::Deserialize;
use thiserror::Error;

use crate::linalg::{parse_rat, rat_i, Rat};
use crate::polytope::{dual_polytope, GeometryError, LatticeVector, WeightedPolytopePair};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("missing {table} weight for vertex index {index}")]
    MissingWeight { table: &'static str, index: usize },
    #[error("{table} key {key:?} is not a vertex index")]
    BadKey { table: &'static str, key: String },
    #[error("{table} weight for vertex index {index} is not a rational: {value:?}")]
    BadRational {
        table: &'static str,
        index: usize,
        value: String,
    },
    #[error("vertex {index} has {found} coordinates, expected dimension {expected}")]
    BadVertex {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unknown example {0:?}")]
    UnknownExample(String),
}

#[derive(Deserialize)]
struct RawInstance {
    dimension: usize,
    delta_vertices: Vec<Vec<i64>>,
    dual_vertices: Option<Vec<Vec<i64>>>,
    lambda: Option<toml::Table>,
    mu: Option<toml::Table>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub pair: WeightedPolytopePair,
}

fn weights_from_table(
    table: Option<&toml::Table>,
    count: usize,
    name: &'static str,
) -> Result<Vec<Rat>, InstanceError> {
    let table = match table {
        None => return Ok(vec![rat_i(-1); count]),
        Some(t) => t,
    };
    let mut out: Vec<Option<Rat>> = vec![None; count];
    for (key, value) in table {
        let index: usize = key.parse().map_err(|_| InstanceError::BadKey {
            table: name,
            key: key.clone(),
        })?;
        if index >= count {
            return Err(InstanceError::BadKey {
                table: name,
                key: key.clone(),
            });
        }
        let text = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            other => other.to_string(),
        };
        let rat = parse_rat(&text).ok_or_else(|| InstanceError::BadRational {
            table: name,
            index,
            value: text.clone(),
        })?;
        out[index] = Some(rat);
    }
    out.into_iter()
        .enumerate()
        .map(|(index, w)| w.ok_or(InstanceError::MissingWeight { table: name, index }))
        .collect()
}

pub fn parse_instance(text: &str, name: &str) -> Result<Instance, InstanceError> {
    let raw: RawInstance = toml::from_str(text)?;
    let dim = raw.dimension;
    let mut delta = Vec::with_capacity(raw.delta_vertices.len());
    for (index, v) in raw.delta_vertices.iter().enumerate() {
        if v.len() != dim {
            return Err(InstanceError::BadVertex {
                index,
                found: v.len(),
                expected: dim,
            });
        }
        delta.push(LatticeVector(v.clone()));
    }
    let dual: Option<Vec<LatticeVector>> = match &raw.dual_vertices {
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for (index, v) in list.iter().enumerate() {
                if v.len() != dim {
                    return Err(InstanceError::BadVertex {
                        index,
                        found: v.len(),
                        expected: dim,
                    });
                }
                out.push(LatticeVector(v.clone()));
            }
            Some(out)
        }
        None => None,
    };
    let dual_count = match &dual {
        Some(d) => d.len(),
        None => dual_polytope(&delta)?.len(),
    };
    let lambda = weights_from_table(raw.lambda.as_ref(), delta.len(), "lambda")?;
    let mu = weights_from_table(raw.mu.as_ref(), dual_count, "mu")?;
    let pair = WeightedPolytopePair::new(delta, dual, lambda, mu)?;
    Ok(Instance {
        name: name.to_string(),
        pair,
    })
}

pub fn load_instance(path: &std::path::Path) -> Result<Instance, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    parse_instance(&text, &name)
}

fn hexagon_toml(eps: &str) -> String {
    format!(
        r#"dimension = 2
delta_vertices = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]]
dual_vertices = [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]]

[mu]
0 = "-1"
1 = "-{eps}"
2 = "-1"
3 = "-1"
4 = "-{eps}"
5 = "-1"
"#
    )
}

/// Bundled instances: the two projective-space simplices, a product, and
/// the hexagon family (the weight on the +-(1,1) facets shrinks to eps;
/// eps = 2/5 is where the zero-pairing facet measure matches the positive
/// section, so the family brackets the counterexample threshold).
pub fn example_catalog() -> Vec<(&'static str, String)> {
    vec![
        (
            "p2-simplex",
            "dimension = 2\ndelta_vertices = [[1, 0], [0, 1], [-1, -1]]\n".to_string(),
        ),
        (
            "p3-simplex",
            "dimension = 3\ndelta_vertices = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]\n"
                .to_string(),
        ),
        (
            "p1xp2-product",
            "dimension = 3\ndelta_vertices = [[1, 0, 1], [1, 0, -1], [0, 1, 1], [0, 1, -1], [-1, -1, 1], [-1, -1, -1]]\n"
                .to_string(),
        ),
        ("hexagon-eps-14", hexagon_toml("1/4")),
        ("hexagon-eps-25", hexagon_toml("2/5")),
        ("hexagon-eps-12", hexagon_toml("1/2")),
        ("hexagon-eps-1", hexagon_toml("1")),
    ]
}

pub fn example(name: &str) -> Result<Instance, InstanceError> {
    for (n, text) in example_catalog() {
        if n == name {
            return parse_instance(&text, n);
        }
    }
    Err(InstanceError::UnknownExample(name.to_string()))
}
