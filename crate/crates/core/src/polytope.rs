//! Exact rational lattice-polytope geometry: reflexive duality, weighted
//! boundary complexes, the pairing condition, H_m^+/- splits, lattice
//! measures on facets, and boundary lattice-point counting.
//!
//! All arithmetic is exact; ambient dimension is 2..=4 and hull /
//! vertex enumeration is brute force over facet-candidate subsets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{
    combinations, det, hyperplane_normal, kernel_basis, primitive_integer, rank, rat_i,
    rat_to_f64, solve, Rat,
};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("vertices do not span the ambient space")]
    NotFullDimensional,
    #[error("polytope is not reflexive: dual vertex {0} is not integral")]
    NotReflexive(String),
    #[error("origin is not strictly interior")]
    OriginNotInterior,
    #[error("weighted polytope is empty or origin is not interior")]
    EmptyPolytope,
    #[error("facet normal {0} is not primitive")]
    NonPrimitiveNormal(String),
    #[error("pairing <n,m> = {0} exceeds 1; input pair is not reflexive")]
    PairingExceedsOne(i64),
    #[error("ambient dimension {0} outside supported range 2..=4")]
    DimensionOutOfRange(usize),
    #[error("invalid weighted pair: {0}")]
    InvalidPair(String),
}

pub type GeoResult<T> = Result<T, GeometryError>;

/// Integer point of M or N, depending on context.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &LatticeVector) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dot_rat(&self, other: &RationalVector) -> Rat {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| rat_i(*a) * b)
            .sum()
    }

    pub fn is_primitive(&self) -> bool {
        let g = self.0.iter().fold(0i64, |a, &b| crate::linalg::gcd_i64(a, b.abs()));
        g == 1
    }

    pub fn to_rational(&self) -> RationalVector {
        RationalVector(self.0.iter().map(|&c| rat_i(c)).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Exact rational point.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RationalVector(pub Vec<Rat>);

impl RationalVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &RationalVector) -> Rat {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &RationalVector) -> RationalVector {
        RationalVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &RationalVector) -> RationalVector {
        RationalVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, s: &Rat) -> RationalVector {
        RationalVector(self.0.iter().map(|a| a * s).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rat_to_f64).collect()
    }

    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(crate::linalg::format_rat)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.key())
    }
}

fn centroid(points: &[RationalVector]) -> RationalVector {
    let dim = points[0].dim();
    let n = rat_i(points.len() as i64);
    let mut c = vec![Rat::zero(); dim];
    for p in points {
        for (acc, x) in c.iter_mut().zip(&p.0) {
            *acc += x;
        }
    }
    RationalVector(c.into_iter().map(|x| x / &n).collect())
}

fn affine_rank(points: &[&RationalVector]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<Rat>> = points[1..]
        .iter()
        .map(|p| p.sub(points[0]).0)
        .collect();
    rank(&rows)
}

/// Which boundary a complex or cloud lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The boundary of the weighted dual polytope, domain of phi.
    Dual,
    /// The boundary of the weighted primal polytope, domain of phi*.
    Primal,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Dual => Side::Primal,
            Side::Primal => Side::Dual,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Dual => "dual",
            Side::Primal => "primal",
        }
    }
}

/// A problem instance: reflexive pair with negative weights on each side.
#[derive(Clone, Debug)]
pub struct WeightedPolytopePair {
    pub delta_vertices: Vec<LatticeVector>,
    pub dual_vertices: Vec<LatticeVector>,
    /// negative weight per delta vertex (defines the dual-side boundary)
    pub lambda: Vec<Rat>,
    /// negative weight per dual vertex (defines the primal-side boundary)
    pub mu: Vec<Rat>,
}

impl WeightedPolytopePair {
    /// Validate and assemble a pair. `dual` is checked when supplied,
    /// computed from `delta` otherwise.
    pub fn new(
        delta: Vec<LatticeVector>,
        dual: Option<Vec<LatticeVector>>,
        lambda: Vec<Rat>,
        mu: Vec<Rat>,
    ) -> GeoResult<Self> {
        let dim = delta.first().map(|v| v.dim()).unwrap_or(0);
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(GeometryError::DimensionOutOfRange(dim));
        }
        let computed = dual_polytope(&delta)?;
        let dual = match dual {
            Some(d) => {
                let a: BTreeSet<_> = d.iter().cloned().collect();
                let b: BTreeSet<_> = computed.iter().cloned().collect();
                if a != b || d.len() != computed.len() {
                    return Err(GeometryError::InvalidPair(
                        "supplied dual_vertices do not match the computed dual".into(),
                    ));
                }
                d // keep the caller's order: mu weights are keyed by it
            }
            None => computed,
        };
        if lambda.len() != delta.len() {
            return Err(GeometryError::InvalidPair(format!(
                "lambda has {} entries for {} delta vertices",
                lambda.len(),
                delta.len()
            )));
        }
        if mu.len() != dual.len() {
            return Err(GeometryError::InvalidPair(format!(
                "mu has {} entries for {} dual vertices",
                mu.len(),
                dual.len()
            )));
        }
        for (i, w) in lambda.iter().enumerate() {
            if !w.is_negative() {
                return Err(GeometryError::InvalidPair(format!(
                    "lambda[{i}] = {} is not negative",
                    crate::linalg::format_rat(w)
                )));
            }
        }
        for (j, w) in mu.iter().enumerate() {
            if !w.is_negative() {
                return Err(GeometryError::InvalidPair(format!(
                    "mu[{j}] = {} is not negative",
                    crate::linalg::format_rat(w)
                )));
            }
        }
        for m in &delta {
            if !m.is_primitive() {
                return Err(GeometryError::NonPrimitiveNormal(format!("{m:?}")));
            }
            for n in &dual {
                if m.dot(n) > 1 {
                    return Err(GeometryError::PairingExceedsOne(m.dot(n)));
                }
            }
        }
        Ok(WeightedPolytopePair {
            delta_vertices: delta,
            dual_vertices: dual,
            lambda,
            mu,
        })
    }

    pub fn dim(&self) -> usize {
        self.delta_vertices[0].dim()
    }

    /// Boundary complex of the weighted dual polytope (side of phi).
    pub fn dual_side_boundary(&self) -> GeoResult<BoundaryComplex> {
        weighted_boundary(&self.delta_vertices, &self.lambda, Side::Dual)
    }

    /// Boundary complex of the weighted primal polytope (side of phi*).
    pub fn primal_side_boundary(&self) -> GeoResult<BoundaryComplex> {
        weighted_boundary(&self.dual_vertices, &self.mu, Side::Primal)
    }
}

/// Report of the pairing condition `<m,n> != 0` over all vertex pairs.
#[derive(Clone, Debug)]
pub struct PairingReport {
    /// index pairs (delta vertex, dual vertex) with vanishing pairing
    pub violations: Vec<(usize, usize)>,
}

impl PairingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn pairing_condition(pair: &WeightedPolytopePair) -> PairingReport {
    let mut violations = Vec::new();
    for (i, m) in pair.delta_vertices.iter().enumerate() {
        for (j, n) in pair.dual_vertices.iter().enumerate() {
            if m.dot(n) == 0 {
                violations.push((i, j));
            }
        }
    }
    PairingReport { violations }
}

/// Full pairing matrix `<m_i, n_j>`.
pub fn pairing_matrix(pair: &WeightedPolytopePair) -> Vec<Vec<i64>> {
    pair.delta_vertices
        .iter()
        .map(|m| pair.dual_vertices.iter().map(|n| m.dot(n)).collect())
        .collect()
}

/// Facets of the convex hull of `points` as `(primitive normal, rhs)` with
/// every point on the `<= rhs` side.
pub fn facets_of_hull(points: &[RationalVector]) -> GeoResult<Vec<(LatticeVector, Rat)>> {
    let dim = points[0].dim();
    let refs: Vec<&RationalVector> = points.iter().collect();
    if affine_rank(&refs) < dim {
        return Err(GeometryError::NotFullDimensional);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for combo in combinations(points.len(), dim) {
        let p0 = &points[combo[0]];
        let diffs: Vec<Vec<Rat>> = combo[1..]
            .iter()
            .map(|&i| points[i].sub(p0).0)
            .collect();
        let normal = match hyperplane_normal(&diffs, dim) {
            Some(n) => n,
            None => continue,
        };
        let mut n = match primitive_integer(&normal) {
            Some(n) => LatticeVector(n),
            None => continue,
        };
        let mut c = n.dot_rat(p0);
        // orient: all points on <= side, otherwise flip; mixed => not a facet
        let mut above = false;
        let mut below = false;
        for p in points {
            let v = n.dot_rat(p);
            if v > c {
                above = true;
            } else if v < c {
                below = true;
            }
        }
        if above && below {
            continue;
        }
        if above {
            n = LatticeVector(n.0.iter().map(|x| -x).collect());
            c = -c;
        }
        let key = (n.clone(), c.clone());
        if seen.insert(key) {
            out.push((n, c));
        }
    }
    Ok(out)
}

/// All vertices of the polyhedron `{ x : <normals[i], x> <= rhs[i] }`,
/// deduplicated and sorted.
pub fn halfspace_vertices(
    normals: &[LatticeVector],
    rhs: &[Rat],
) -> Vec<RationalVector> {
    let dim = normals[0].dim();
    let mut verts: BTreeSet<RationalVector> = BTreeSet::new();
    for combo in combinations(normals.len(), dim) {
        let a: Vec<Vec<Rat>> = combo
            .iter()
            .map(|&i| normals[i].to_rational().0)
            .collect();
        let b: Vec<Rat> = combo.iter().map(|&i| rhs[i].clone()).collect();
        let x = match solve(&a, &b) {
            Some(x) => RationalVector(x),
            None => continue,
        };
        let feasible = normals
            .iter()
            .zip(rhs)
            .all(|(n, c)| n.dot_rat(&x) <= *c);
        if feasible {
            verts.insert(x);
        }
    }
    verts.into_iter().collect()
}

/// Vertex set of the reflexive dual `{ x : <m, x> <= 1 for all m }`.
///
/// Errors if the input is not full dimensional, the origin is not strictly
/// interior, or some dual vertex is non-integral.
pub fn dual_polytope(vertices: &[LatticeVector]) -> GeoResult<Vec<LatticeVector>> {
    let points: Vec<RationalVector> = vertices.iter().map(|v| v.to_rational()).collect();
    let facets = facets_of_hull(&points)?;
    for (_, c) in &facets {
        if !c.is_positive() {
            return Err(GeometryError::OriginNotInterior);
        }
    }
    let ones: Vec<Rat> = vec![Rat::one(); vertices.len()];
    let dual_verts = halfspace_vertices(vertices, &ones);
    let mut out = Vec::new();
    for v in dual_verts {
        let mut coords = Vec::with_capacity(v.dim());
        for c in &v.0 {
            if !c.denom().is_one() {
                return Err(GeometryError::NotReflexive(v.key()));
            }
            coords.push(
                num::traits::ToPrimitive::to_i64(c.numer())
                    .ok_or_else(|| GeometryError::NotReflexive(v.key()))?,
            );
        }
        out.push(LatticeVector(coords));
    }
    out.sort();
    Ok(out)
}

/// A facet of a weighted boundary, cut out by `<x, label> = offset`.
#[derive(Clone, Debug)]
pub struct Facet {
    pub label: LatticeVector,
    /// rhs of the supporting inequality, equals minus the weight
    pub offset: Rat,
    pub vertices: Vec<RationalVector>,
    /// D-1 lattice vectors spanning the facet direction lattice
    pub tangent_basis: Vec<LatticeVector>,
    pub lattice_area: Rat,
    /// (D-1)-simplices partitioning the facet (recursive centroid fan)
    pub triangulation: Vec<Vec<RationalVector>>,
}

#[derive(Clone, Debug)]
pub struct BoundaryComplex {
    pub side: Side,
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub total_lattice_measure: Rat,
    /// polytope vertex (by exact coordinate key) -> facet indices containing it
    pub incidence: BTreeMap<String, Vec<usize>>,
}

impl BoundaryComplex {
    pub fn facet_by_label(&self, label: &LatticeVector) -> Option<usize> {
        self.facets.iter().position(|f| &f.label == label)
    }

    /// All polytope vertices of the underlying weighted polytope.
    pub fn polytope_vertices(&self) -> Vec<RationalVector> {
        let mut set: BTreeSet<RationalVector> = BTreeSet::new();
        for f in &self.facets {
            for v in &f.vertices {
                set.insert(v.clone());
            }
        }
        set.into_iter().collect()
    }
}

/// Lattice (normalized Lebesgue) measure of a (D-1)-simplex lying on the
/// hyperplane with primitive normal `normal`:
/// `|det(p_1 - p_0, ..., p_{D-1} - p_0, v)| / (D-1)!` with `<v, normal> = 1`.
pub fn simplex_lattice_measure(
    simplex: &[RationalVector],
    normal: &LatticeVector,
) -> GeoResult<Rat> {
    let dim = normal.dim();
    assert_eq!(simplex.len(), dim);
    let (v, _) = kernel_basis(&normal.0)
        .ok_or_else(|| GeometryError::NonPrimitiveNormal(format!("{normal:?}")))?;
    let mut rows: Vec<Vec<Rat>> = simplex[1..]
        .iter()
        .map(|p| p.sub(&simplex[0]).0)
        .collect();
    rows.push(v.iter().map(|&c| rat_i(c)).collect());
    let mut d = det(&rows).abs();
    let mut fact = 1i64;
    for k in 2..dim {
        fact *= k as i64;
    }
    d /= rat_i(fact);
    Ok(d)
}

/// Lattice measure of a whole facet (sum over its triangulation).
/// A degenerate facet has measure zero.
pub fn lattice_measure(facet: &Facet) -> GeoResult<Rat> {
    if !facet.label.is_primitive() {
        return Err(GeometryError::NonPrimitiveNormal(format!(
            "{:?}",
            facet.label
        )));
    }
    let mut total = Rat::zero();
    for s in &facet.triangulation {
        total += simplex_lattice_measure(s, &facet.label)?;
    }
    Ok(total)
}

/// Recursive centroid-fan triangulation of a `face_dim`-dimensional face
/// given by the vertex indices `vidx` into `pts`. Subfaces are detected by
/// tightening the remaining halfspaces.
fn fan_triangulate(
    vidx: &[usize],
    pts: &[RationalVector],
    face_dim: usize,
    halfspaces: &[(LatticeVector, Rat)],
) -> Vec<Vec<RationalVector>> {
    if vidx.len() == face_dim + 1 {
        return vec![vidx.iter().map(|&i| pts[i].clone()).collect()];
    }
    let face_pts: Vec<RationalVector> = vidx.iter().map(|&i| pts[i].clone()).collect();
    let c = centroid(&face_pts);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut simplices = Vec::new();
    for (n, rhs) in halfspaces {
        let tight: Vec<usize> = vidx
            .iter()
            .copied()
            .filter(|&i| n.dot_rat(&pts[i]) == *rhs)
            .collect();
        if tight.len() == vidx.len() || tight.len() < face_dim {
            continue;
        }
        let refs: Vec<&RationalVector> = tight.iter().map(|&i| &pts[i]).collect();
        if affine_rank(&refs) != face_dim - 1 {
            continue;
        }
        let mut key = tight.clone();
        key.sort_unstable();
        if !seen.insert(key) {
            continue;
        }
        for sub in fan_triangulate(&tight, pts, face_dim - 1, halfspaces) {
            let mut s = Vec::with_capacity(sub.len() + 1);
            s.push(c.clone());
            s.extend(sub);
            simplices.push(s);
        }
    }
    simplices
}

/// Build the full facet complex of `{ max_i <x, normals[i]> + weights[i] <= 0 }`.
/// Facets with empty relative interior are retained with lattice_area 0.
pub fn weighted_boundary(
    normals: &[LatticeVector],
    weights: &[Rat],
    side: Side,
) -> GeoResult<BoundaryComplex> {
    let dim = normals[0].dim();
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(GeometryError::DimensionOutOfRange(dim));
    }
    assert_eq!(normals.len(), weights.len());
    let rhs: Vec<Rat> = weights.iter().map(|w| -w.clone()).collect();
    if rhs.iter().any(|c| !c.is_positive()) {
        return Err(GeometryError::EmptyPolytope);
    }
    for n in normals {
        if !n.is_primitive() {
            return Err(GeometryError::NonPrimitiveNormal(format!("{n:?}")));
        }
    }
    let verts = halfspace_vertices(normals, &rhs);
    {
        let refs: Vec<&RationalVector> = verts.iter().collect();
        if verts.len() < dim + 1 || affine_rank(&refs) < dim {
            return Err(GeometryError::EmptyPolytope);
        }
    }
    let halfspaces: Vec<(LatticeVector, Rat)> = normals
        .iter()
        .cloned()
        .zip(rhs.iter().cloned())
        .collect();
    let mut facets = Vec::with_capacity(normals.len());
    let mut total = Rat::zero();
    for (n, c) in &halfspaces {
        let tight: Vec<usize> = (0..verts.len())
            .filter(|&i| n.dot_rat(&verts[i]) == *c)
            .collect();
        let (_, tangent) = kernel_basis(&n.0)
            .ok_or_else(|| GeometryError::NonPrimitiveNormal(format!("{n:?}")))?;
        let refs: Vec<&RationalVector> = tight.iter().map(|&i| &verts[i]).collect();
        let full = tight.len() >= dim && affine_rank(&refs) == dim - 1;
        let triangulation = if full {
            fan_triangulate(&tight, &verts, dim - 1, &halfspaces)
        } else {
            Vec::new()
        };
        let mut facet = Facet {
            label: n.clone(),
            offset: c.clone(),
            vertices: tight.iter().map(|&i| verts[i].clone()).collect(),
            tangent_basis: tangent.into_iter().map(LatticeVector).collect(),
            lattice_area: Rat::zero(),
            triangulation,
        };
        facet.lattice_area = lattice_measure(&facet)?;
        total += &facet.lattice_area;
        facets.push(facet);
    }
    let mut incidence: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (fi, f) in facets.iter().enumerate() {
        for v in &f.vertices {
            incidence.entry(v.key()).or_default().push(fi);
        }
    }
    Ok(BoundaryComplex {
        side,
        dim,
        facets,
        total_lattice_measure: total,
        incidence,
    })
}

/// The H_m^+/- decomposition of a primal-side complex, with the exact
/// projection Jacobians `|<n, m>|` on the minus side.
#[derive(Clone, Debug)]
pub struct HSplit {
    pub m: LatticeVector,
    pub plus_facets: Vec<usize>,
    pub minus_facets: Vec<usize>,
    pub zero_facets: Vec<usize>,
    pub projection_jacobians: BTreeMap<usize, i64>,
}

pub fn h_split(complex_mu: &BoundaryComplex, m: &LatticeVector) -> GeoResult<HSplit> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut zero = Vec::new();
    let mut jac = BTreeMap::new();
    for (i, f) in complex_mu.facets.iter().enumerate() {
        let s = f.label.dot(m);
        if s > 1 {
            return Err(GeometryError::PairingExceedsOne(s));
        }
        match s {
            1 => plus.push(i),
            0 => zero.push(i),
            _ => {
                minus.push(i);
                jac.insert(i, s.abs());
            }
        }
    }
    Ok(HSplit {
        m: m.clone(),
        plus_facets: plus,
        minus_facets: minus,
        zero_facets: zero,
        projection_jacobians: jac,
    })
}

/// Exact 1-D clipping of the line `base + t * dir` against the polytope
/// underlying `complex`. Returns `(t_lo, t_hi, facet_lo, facet_hi)` where
/// the facet indices witness the first tight constraint at each end.
pub fn clip_line(
    complex: &BoundaryComplex,
    base: &RationalVector,
    dir: &LatticeVector,
) -> Option<(Rat, Rat, usize, usize)> {
    let mut t_lo: Option<(Rat, usize)> = None;
    let mut t_hi: Option<(Rat, usize)> = None;
    for (i, f) in complex.facets.iter().enumerate() {
        let s = f.label.dot(dir);
        let margin = &f.offset - f.label.dot_rat(base);
        if s == 0 {
            if margin.is_negative() {
                return None;
            }
            continue;
        }
        let bound = &margin / rat_i(s);
        if s > 0 {
            match &t_hi {
                Some((t, _)) if *t <= bound => {}
                _ => t_hi = Some((bound, i)),
            }
        } else {
            match &t_lo {
                Some((t, _)) if *t >= bound => {}
                _ => t_lo = Some((bound, i)),
            }
        }
    }
    let (lo, flo) = t_lo?;
    let (hi, fhi) = t_hi?;
    if lo > hi {
        return None;
    }
    Some((lo, hi, flo, fhi))
}

/// The unique point of H_m^+ (sign = +1) or H_m^- (sign = -1) on the fiber
/// of `base` under the quotient along `m`. Returns the point and the facet
/// achieving it.
pub fn section_point(
    complex_mu: &BoundaryComplex,
    m: &LatticeVector,
    base: &RationalVector,
    sign: i32,
) -> Option<(RationalVector, usize)> {
    let (lo, hi, flo, fhi) = clip_line(complex_mu, base, m)?;
    let (t, facet) = if sign >= 0 { (hi, fhi) } else { (lo, flo) };
    let p = base.add(&m.to_rational().scale(&t));
    Some((p, facet))
}

/// Exact count of Z^D points on the boundary of the k-th dilate of the
/// integral polytope with the given vertices.
pub fn count_boundary_lattice_points(
    vertices: &[LatticeVector],
    k: i64,
) -> GeoResult<u64> {
    assert!(k >= 1);
    let dim = vertices[0].dim();
    let points: Vec<RationalVector> = vertices.iter().map(|v| v.to_rational()).collect();
    let facets = facets_of_hull(&points)?;
    // integral vertices + primitive normals => integral offsets
    let ineqs: Vec<(Vec<i64>, i64)> = facets
        .iter()
        .map(|(n, c)| {
            debug_assert!(c.denom().is_one());
            let c: i64 = num::traits::ToPrimitive::to_i64(c.numer()).unwrap();
            (n.0.clone(), c * k)
        })
        .collect();
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for v in vertices {
        for d in 0..dim {
            lo[d] = lo[d].min(v.0[d] * k);
            hi[d] = hi[d].max(v.0[d] * k);
        }
    }
    let mut count = 0u64;
    let mut x = lo.clone();
    'outer: loop {
        let mut inside = true;
        let mut on_boundary = false;
        for (n, c) in &ineqs {
            let dot: i64 = n.iter().zip(&x).map(|(a, b)| a * b).sum();
            if dot > *c {
                inside = false;
                break;
            }
            if dot == *c {
                on_boundary = true;
            }
        }
        if inside && on_boundary {
            count += 1;
        }
        // odometer
        for d in 0..dim {
            x[d] += 1;
            if x[d] <= hi[d] {
                continue 'outer;
            }
            x[d] = lo[d];
        }
        break;
    }
    Ok(count)
}
