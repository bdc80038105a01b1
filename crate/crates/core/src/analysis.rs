//! Structure analysis of a minimizer: delta-relaxed conjugate and gradient
//! sets, the good/bad/singular classification, mass-inequality audits,
//! the Legendre round-trip, and the real Monge-Ampere residual.
//!
//! Conventions: the potential lives on cloud A, its conjugate on cloud B.
//! A sample's facet label is the lattice vector defining the facet that
//! contains it (samples are cell barycenters, so the facet is unique).
//! "Mass" always means normalized sample weight; lattice units appear only
//! in the Monge-Ampere comparison, which multiplies the normalized weights
//! back by the total boundary lattice measures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::linalg::rat_to_f64;
use crate::mesh::SampleCloud;
use crate::polytope::BoundaryComplex;
use crate::solver::SolveResult;

/// How the conjugacy slack delta is chosen.
#[derive(Clone, Copy, Debug)]
pub enum DeltaRule {
    /// delta = factor * h(A) * max |p| over B; tracks the mesh scale
    FactorHR(f64),
    /// fixed absolute slack
    Absolute(f64),
}

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub delta_rule: DeltaRule,
    /// two gradients farther apart than `separation_factor * h(B)` mark a
    /// genuine multi-gradient point rather than adjacent-cell ties
    pub separation_factor: f64,
    pub region_count: usize,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            delta_rule: DeltaRule::FactorHR(4.0),
            separation_factor: 4.0,
            region_count: 50,
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn delta(&self, cloud_a: &SampleCloud, cloud_b: &SampleCloud) -> f64 {
        match self.delta_rule {
            DeltaRule::Absolute(d) => d,
            DeltaRule::FactorHR(f) => {
                let r = cloud_b
                    .points
                    .iter()
                    .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                f * cloud_a.h * r
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConjugacyRecord {
    pub sample: usize,
    /// B indices with conjugacy defect <= delta (always nonempty)
    pub conjugates: Vec<usize>,
    /// conjugates on facets pairing +1 with this sample's facet label
    pub gradients: Vec<usize>,
    /// conjugates that are not gradients
    pub anomalous: Vec<usize>,
    /// smallest defect over all of B (zero for closed potentials)
    pub min_defect: f64,
    pub multi_gradient: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// no anomalous conjugate
    GoodTypeI,
    /// anomalous conjugates, all on strictly-negative-pairing facets
    GoodTypeII,
    /// an anomalous conjugate on a zero-pairing facet
    Bad,
    /// well-separated multiple gradients
    Singular,
}

impl Classification {
    pub fn tag(self) -> &'static str {
        match self {
            Classification::GoodTypeI => "good-type-1",
            Classification::GoodTypeII => "good-type-2",
            Classification::Bad => "bad",
            Classification::Singular => "singular",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub records: Vec<ConjugacyRecord>,
    pub classes: Vec<Classification>,
    pub good_mass: f64,
    pub type1_mass: f64,
    pub type2_mass: f64,
    pub bad_mass: f64,
    pub singular_mass: f64,
    pub delta: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// delta-relaxed conjugate and gradient sets of every A-sample. The
/// best-defect B-sample is always a conjugate, and the best-defect sample
/// among positive-pairing facets is always a gradient, so both sets are
/// nonempty regardless of delta.
pub fn conjugate_sets(
    result: &SolveResult,
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    complex_a: &BoundaryComplex,
    complex_b: &BoundaryComplex,
    delta: f64,
    separation: f64,
) -> Vec<ConjugacyRecord> {
    let pairing: Vec<Vec<i64>> = complex_a
        .facets
        .iter()
        .map(|fa| {
            complex_b
                .facets
                .iter()
                .map(|fb| fa.label.dot(&fb.label))
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(cloud_a.points.len());
    for (i, x) in cloud_a.points.iter().enumerate() {
        let fi = x.facet;
        let mut best = f64::INFINITY;
        let mut best_j = 0;
        let mut best_plus = f64::INFINITY;
        let mut best_plus_j: Option<usize> = None;
        let mut defects = Vec::with_capacity(cloud_b.points.len());
        for (j, p) in cloud_b.points.iter().enumerate() {
            let d = result.phi.values[i] + result.phi_star.values[j]
                - x.position
                    .iter()
                    .zip(&p.position)
                    .map(|(u, v)| u * v)
                    .sum::<f64>();
            debug_assert!(d >= -1e-12, "conjugacy defect {d} below tolerance");
            defects.push(d);
            if d < best {
                best = d;
                best_j = j;
            }
            if pairing[fi][p.facet] == 1 && d < best_plus {
                best_plus = d;
                best_plus_j = Some(j);
            }
        }
        let mut conjugates: Vec<usize> = (0..cloud_b.points.len())
            .filter(|&j| defects[j] <= delta)
            .collect();
        if !conjugates.contains(&best_j) {
            conjugates.push(best_j);
            conjugates.sort_unstable();
        }
        let mut gradients: Vec<usize> = conjugates
            .iter()
            .copied()
            .filter(|&j| pairing[fi][cloud_b.points[j].facet] == 1)
            .collect();
        if let Some(j) = best_plus_j {
            if !gradients.contains(&j) {
                gradients.push(j);
                gradients.sort_unstable();
            }
        }
        let anomalous: Vec<usize> = conjugates
            .iter()
            .copied()
            .filter(|j| !gradients.contains(j))
            .collect();
        let mut multi = false;
        'outer: for (k, &g1) in gradients.iter().enumerate() {
            for &g2 in &gradients[k + 1..] {
                if dist(
                    &cloud_b.points[g1].position,
                    &cloud_b.points[g2].position,
                ) > separation
                {
                    multi = true;
                    break 'outer;
                }
            }
        }
        records.push(ConjugacyRecord {
            sample: i,
            conjugates,
            gradients,
            anomalous,
            min_defect: best,
            multi_gradient: multi,
        });
    }
    records
}

/// Per-sample labels and the mass decomposition. Priority on conflicting
/// evidence: Bad > Singular > GoodTypeII > GoodTypeI.
pub fn classify(
    records: &[ConjugacyRecord],
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    complex_a: &BoundaryComplex,
    complex_b: &BoundaryComplex,
    delta: f64,
) -> AnalysisReport {
    let pairing: Vec<Vec<i64>> = complex_a
        .facets
        .iter()
        .map(|fa| {
            complex_b
                .facets
                .iter()
                .map(|fb| fa.label.dot(&fb.label))
                .collect()
        })
        .collect();
    let mut classes = Vec::with_capacity(records.len());
    let (mut t1, mut t2, mut bad, mut sing) = (0.0, 0.0, 0.0, 0.0);
    for rec in records {
        let fi = cloud_a.points[rec.sample].facet;
        let has_zero = rec
            .anomalous
            .iter()
            .any(|&j| pairing[fi][cloud_b.points[j].facet] == 0);
        let class = if has_zero {
            Classification::Bad
        } else if rec.multi_gradient {
            Classification::Singular
        } else if !rec.anomalous.is_empty() {
            Classification::GoodTypeII
        } else {
            Classification::GoodTypeI
        };
        let w = cloud_a.points[rec.sample].weight;
        match class {
            Classification::GoodTypeI => t1 += w,
            Classification::GoodTypeII => t2 += w,
            Classification::Bad => bad += w,
            Classification::Singular => sing += w,
        }
        classes.push(class);
    }
    AnalysisReport {
        records: records.to_vec(),
        classes,
        good_mass: t1 + t2,
        type1_mass: t1,
        type2_mass: t2,
        bad_mass: bad,
        singular_mass: sing,
        delta,
    }
}

/// A test region: a set of A-sample indices.
#[derive(Clone, Debug)]
pub struct Region {
    pub name: String,
    pub indices: Vec<usize>,
}

/// Default region list: every full facet plus `count` random in-facet balls
/// centered at samples with radius a random fraction of the facet diameter.
pub fn default_regions(
    cloud_a: &SampleCloud,
    complex_a: &BoundaryComplex,
    count: usize,
    seed: u64,
) -> Vec<Region> {
    let mut regions = Vec::new();
    for (fi, f) in complex_a.facets.iter().enumerate() {
        let indices: Vec<usize> = (0..cloud_a.points.len())
            .filter(|&i| cloud_a.points[i].facet == fi)
            .collect();
        if !indices.is_empty() {
            regions.push(Region {
                name: format!("facet-{}", f.label),
                indices,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cloud_a.points.len();
    let mut made = 0;
    while made < count {
        let c = rng.gen_range(0..n);
        let fi = cloud_a.points[c].facet;
        let facet = &complex_a.facets[fi];
        let mut diam: f64 = 0.0;
        for (k, v) in facet.vertices.iter().enumerate() {
            for w in &facet.vertices[k + 1..] {
                diam = diam.max(dist(&v.to_f64(), &w.to_f64()));
            }
        }
        let r = rng.gen_range(0.15..0.5) * diam;
        let center = cloud_a.points[c].position.clone();
        let indices: Vec<usize> = (0..n)
            .filter(|&i| {
                cloud_a.points[i].facet == fi
                    && dist(&cloud_a.points[i].position, &center) <= r
            })
            .collect();
        if indices.is_empty() {
            continue;
        }
        regions.push(Region {
            name: format!("ball-{made}"),
            indices,
        });
        made += 1;
    }
    regions
}

/// One audit row: masses of a region and of its conjugate/gradient images.
#[derive(Clone, Debug)]
pub struct AuditRow {
    pub region: String,
    pub mass: f64,
    pub conj_image_mass: f64,
    pub grad_image_mass: f64,
    /// mass - conj_image_mass; the variational inequality wants <= rho(h)
    pub conj_slack: f64,
    /// grad_image_mass - mass; gradient monotonicity wants <= rho(h)
    pub grad_slack: f64,
}

pub fn inequality_audit(
    records: &[ConjugacyRecord],
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    regions: &[Region],
) -> Vec<AuditRow> {
    regions
        .iter()
        .map(|reg| {
            let mass: f64 = reg
                .indices
                .iter()
                .map(|&i| cloud_a.points[i].weight)
                .sum();
            let mut conj: BTreeSet<usize> = BTreeSet::new();
            let mut grad: BTreeSet<usize> = BTreeSet::new();
            for &i in &reg.indices {
                conj.extend(records[i].conjugates.iter().copied());
                grad.extend(records[i].gradients.iter().copied());
            }
            let conj_mass: f64 = conj.iter().map(|&j| cloud_b.points[j].weight).sum();
            let grad_mass: f64 = grad.iter().map(|&j| cloud_b.points[j].weight).sum();
            AuditRow {
                region: reg.name.clone(),
                mass,
                conj_image_mass: conj_mass,
                grad_image_mass: grad_mass,
                conj_slack: mass - conj_mass,
                grad_slack: grad_mass - mass,
            }
        })
        .collect()
}

/// Least-squares fit of slack = C * h through the origin.
pub fn fit_slope(hs: &[f64], slacks: &[f64]) -> f64 {
    let num: f64 = hs.iter().zip(slacks).map(|(h, s)| h * s).sum();
    let den: f64 = hs.iter().map(|h| h * h).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct RoundtripStats {
    /// fraction of type-I good mass whose round trip returns within 2h
    pub fraction_within_2h: f64,
    pub good_mass_a: f64,
    pub good_mass_b: f64,
    /// | |G| - |G_dual| |
    pub good_mass_gap: f64,
}

/// Legendre round-trip: follow the best gradient of a type-I good sample to
/// the other side and the best gradient there back; measure the return
/// distance against 2 h(A).
pub fn duality_roundtrip(
    report_a: &AnalysisReport,
    report_b: &AnalysisReport,
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
) -> RoundtripStats {
    let _ = cloud_b;
    let mut total = 0.0;
    let mut within = 0.0;
    for (i, rec) in report_a.records.iter().enumerate() {
        if report_a.classes[i] != Classification::GoodTypeI || rec.multi_gradient {
            continue;
        }
        let w = cloud_a.points[i].weight;
        total += w;
        // gradients of a non-singular sample are one tight cluster; take the
        // best return distance over the whole cluster's back-images
        let mut d = f64::INFINITY;
        for &j in &rec.gradients {
            for &k in &report_b.records[j].gradients {
                d = d.min(dist(
                    &cloud_a.points[k].position,
                    &cloud_a.points[i].position,
                ));
            }
        }
        if d <= 2.0 * cloud_a.h {
            within += w;
        }
    }
    RoundtripStats {
        fraction_within_2h: if total > 0.0 { within / total } else { 1.0 },
        good_mass_a: report_a.good_mass,
        good_mass_b: report_b.good_mass,
        good_mass_gap: (report_a.good_mass - report_b.good_mass).abs(),
    }
}

/// Residual of the weak Monge-Ampere equation on one facet: for each
/// depth-0 triangulation cell E, compare the gradient-image lattice measure
/// against c0 times the lattice measure of E (both unnormalized).
#[derive(Clone, Debug)]
pub struct MaCellResidual {
    pub facet: usize,
    pub root_simplex: usize,
    pub cell_measure: f64,
    pub image_measure: f64,
    pub relative_residual: f64,
}

#[derive(Clone, Debug)]
pub struct MaResidualReport {
    pub cells: Vec<MaCellResidual>,
    pub max_relative: f64,
    pub mean_relative: f64,
    /// false when the pairing condition fails; the theorem does not apply
    pub applicable: bool,
}

pub fn ma_residual(
    records: &[ConjugacyRecord],
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    c0: f64,
    applicable: bool,
) -> MaResidualReport {
    let total_a = rat_to_f64(&cloud_a.total_lattice_measure);
    let total_b = rat_to_f64(&cloud_b.total_lattice_measure);
    let mut keys: BTreeSet<(usize, usize)> = BTreeSet::new();
    for p in &cloud_a.points {
        keys.insert((p.facet, p.root_simplex));
    }
    let mut cells = Vec::new();
    let (mut mx, mut sum) = (0.0f64, 0.0f64);
    for (fi, ri) in keys {
        let mut cell_measure = 0.0;
        let mut image: BTreeSet<usize> = BTreeSet::new();
        for (i, p) in cloud_a.points.iter().enumerate() {
            if p.facet == fi && p.root_simplex == ri {
                cell_measure += p.weight * total_a;
                image.extend(records[i].gradients.iter().copied());
            }
        }
        let image_measure: f64 = image
            .iter()
            .map(|&j| cloud_b.points[j].weight * total_b)
            .sum();
        let rel = (image_measure - c0 * cell_measure).abs() / (c0 * cell_measure);
        mx = mx.max(rel);
        sum += rel;
        cells.push(MaCellResidual {
            facet: fi,
            root_simplex: ri,
            cell_measure,
            image_measure,
            relative_residual: rel,
        });
    }
    let n = cells.len().max(1) as f64;
    MaResidualReport {
        max_relative: mx,
        mean_relative: sum / n,
        cells,
        applicable,
    }
}

/// Convexity diagnostics of the ambient extension restricted to one facet.
#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub max_midpoint_defect: f64,
    /// max distance from a difference-quotient gradient estimate to the
    /// range of <., p> slopes over the opposite cloud
    pub max_slope_excess: f64,
    /// fraction of samples whose active supporting piece is one of the
    /// sample's recorded conjugates
    pub subgradient_agreement: f64,
}

pub fn convexity_check(
    extension: &crate::ctransform::AmbientExtension,
    records: &[ConjugacyRecord],
    cloud_a: &SampleCloud,
    cloud_b: &SampleCloud,
    facet: usize,
    trials: usize,
    seed: u64,
) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..cloud_a.points.len())
        .filter(|&i| cloud_a.points[i].facet == facet)
        .collect();
    let mut max_defect: f64 = 0.0;
    let mut max_excess: f64 = 0.0;
    let slope_bound = cloud_b
        .points
        .iter()
        .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if idx.len() >= 2 {
        for _ in 0..trials {
            let a = &cloud_a.points[idx[rng.gen_range(0..idx.len())]].position;
            let b = &cloud_a.points[idx[rng.gen_range(0..idx.len())]].position;
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let defect =
                extension.eval(&mid) - 0.5 * (extension.eval(a) + extension.eval(b));
            max_defect = max_defect.max(defect);
            // difference-quotient slope along the segment must respect the
            // Lipschitz bound max |p| of the opposite polytope
            let len = dist(a, b);
            if len > 1e-12 {
                let slope = (extension.eval(b) - extension.eval(a)).abs() / len;
                max_excess = max_excess.max(slope - slope_bound);
            }
        }
    }
    let mut agree = 0usize;
    let mut cnt = 0usize;
    for &i in &idx {
        let piece = extension.active_piece(&cloud_a.points[i].position);
        cnt += 1;
        if records[i].conjugates.contains(&piece) {
            agree += 1;
        }
    }
    ConvexityReport {
        max_midpoint_defect: max_defect,
        max_slope_excess: max_excess,
        subgradient_agreement: if cnt > 0 {
            agree as f64 / cnt as f64
        } else {
            1.0
        },
    }
}

/// CSV of an audit table.
pub fn audit_to_csv(rows: &[AuditRow]) -> String {
    let mut s =
        String::from("region,mass,conj_image_mass,grad_image_mass,conj_slack,grad_slack\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.region,
            crate::report::fmt_f64(r.mass),
            crate::report::fmt_f64(r.conj_image_mass),
            crate::report::fmt_f64(r.grad_image_mass),
            crate::report::fmt_f64(r.conj_slack),
            crate::report::fmt_f64(r.grad_slack),
        ));
    }
    s
}

/// CSV of the per-sample classification.
pub fn classification_to_csv(report: &AnalysisReport) -> String {
    let mut s = String::from(
        "index,class,min_defect,n_conjugates,n_gradients,n_anomalous,multi_gradient\n",
    );
    for (rec, class) in report.records.iter().zip(&report.classes) {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            rec.sample,
            class.tag(),
            crate::report::fmt_f64(rec.min_defect),
            rec.conjugates.len(),
            rec.gradients.len(),
            rec.anomalous.len(),
            rec.multi_gradient,
        ));
    }
    s
}

/// CSV of Monge-Ampere cell residuals.
pub fn ma_to_csv(report: &MaResidualReport) -> String {
    let mut s = String::from(
        "facet,root_simplex,cell_measure,image_measure,relative_residual\n",
    );
    for c in &report.cells {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            c.facet,
            c.root_simplex,
            crate::report::fmt_f64(c.cell_measure),
            crate::report::fmt_f64(c.image_measure),
            crate::report::fmt_f64(c.relative_residual),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::example;
    use crate::mesh::triangulate_refine;
    use crate::polytope::pairing_condition;
    use crate::solver::{solve_lp_oracle, SolverConfig};

    struct Setup {
        cloud_a: SampleCloud,
        cloud_b: SampleCloud,
        complex_a: BoundaryComplex,
        complex_b: BoundaryComplex,
        result: SolveResult,
        records: Vec<ConjugacyRecord>,
        report: AnalysisReport,
        delta: f64,
    }

    fn setup(name: &str, depth: usize, delta: f64) -> Setup {
        let inst = example(name).unwrap();
        let complex_a = inst.pair.dual_side_boundary().unwrap();
        let complex_b = inst.pair.primal_side_boundary().unwrap();
        let cloud_a = triangulate_refine(&complex_a, depth).unwrap();
        let cloud_b = triangulate_refine(&complex_b, depth).unwrap();
        let result = solve_lp_oracle(&cloud_a, &cloud_b, &SolverConfig::default()).unwrap();
        let sep = 4.0 * cloud_b.h;
        let records = conjugate_sets(
            &result, &cloud_a, &cloud_b, &complex_a, &complex_b, delta, sep,
        );
        let report = classify(&records, &cloud_a, &cloud_b, &complex_a, &complex_b, delta);
        Setup {
            cloud_a,
            cloud_b,
            complex_a,
            complex_b,
            result,
            records,
            report,
            delta,
        }
    }

    fn swap_result(s: &Setup) -> SolveResult {
        SolveResult {
            phi: s.result.phi_star.clone(),
            phi_star: s.result.phi.clone(),
            plan: None,
            duality_gap: s.result.duality_gap,
            functional_value: s.result.functional_value,
        }
    }

    #[test]
    fn conjugate_sets_basics() {
        let s = setup("p2-simplex", 3, 1e-7);
        for rec in &s.records {
            assert!(!rec.conjugates.is_empty());
            assert!(!rec.gradients.is_empty());
            assert!(rec.min_defect >= -1e-12);
            for g in &rec.gradients {
                assert!(rec.conjugates.contains(g));
            }
            for a in &rec.anomalous {
                assert!(!rec.gradients.contains(a));
            }
        }
        // LP complementary slackness: support pairs are conjugate pairs
        for &(i, j, w) in &s.result.plan.as_ref().unwrap().entries {
            if w > 1e-9 {
                assert!(
                    s.records[i].conjugates.contains(&j),
                    "plan pair ({i},{j}) mass {w} missing from conjugates"
                );
            }
        }
    }

    #[test]
    fn p2_is_all_good() {
        let s = setup("p2-simplex", 4, 1e-7);
        assert_eq!(s.report.bad_mass, 0.0);
        assert_eq!(s.report.singular_mass, 0.0);
        assert!((s.report.good_mass - 1.0).abs() < 1e-9);
        let total = s.report.good_mass + s.report.bad_mass + s.report.singular_mass;
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hexagon_has_bad_mass() {
        let s = setup("hexagon-eps-14", 4, 1e-7);
        assert!(pairing_condition(&example("hexagon-eps-14").unwrap().pair)
            .violations
            .len()
            > 0);
        assert!(s.report.bad_mass > 0.0);
        // every Bad sample has an anomalous conjugate on a zero-pairing facet
        for (rec, class) in s.report.records.iter().zip(&s.report.classes) {
            if *class == Classification::Bad {
                let fi = s.cloud_a.points[rec.sample].facet;
                let m = &s.complex_a.facets[fi].label;
                assert!(rec.anomalous.iter().any(|&j| {
                    let n = &s.complex_b.facets[s.cloud_b.points[j].facet].label;
                    m.dot(n) == 0
                }));
            }
        }
        let total = s.report.good_mass + s.report.bad_mass + s.report.singular_mass;
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bad_impossible_without_zero_pairing() {
        // classification on an instance with no zero pairings can never be Bad
        for name in ["p2-simplex", "p1xp2-product"] {
            let s = setup(name, 2, 1e-7);
            assert!(s
                .report
                .classes
                .iter()
                .all(|c| *c != Classification::Bad));
        }
    }

    #[test]
    fn audit_full_boundary_and_facets() {
        let s = setup("p2-simplex", 3, 1e-7);
        let all = Region {
            name: "all".into(),
            indices: (0..s.cloud_a.points.len()).collect(),
        };
        let rows = inequality_audit(&s.records, &s.cloud_a, &s.cloud_b, &[all]);
        assert!((rows[0].conj_image_mass - 1.0).abs() < 1e-9);
        // facet-level audits: conjugate image never loses mass, gradient
        // image never gains more than the h-scale band
        let regions = default_regions(&s.cloud_a, &s.complex_a, 10, 3);
        let rows = inequality_audit(&s.records, &s.cloud_a, &s.cloud_b, &regions);
        for r in &rows {
            assert!(r.conj_slack <= 1e-12, "{}: conj slack {}", r.region, r.conj_slack);
            assert!(
                r.grad_slack <= 4.0 * s.cloud_a.h,
                "{}: grad slack {}",
                r.region,
                r.grad_slack
            );
        }
    }

    #[test]
    fn audit_slack_shrinks_with_depth() {
        let mut slacks = Vec::new();
        let mut hs = Vec::new();
        for depth in [2usize, 3, 4] {
            let s = setup("p2-simplex", depth, 1e-7);
            let regions = default_regions(&s.cloud_a, &s.complex_a, 20, 11);
            let rows = inequality_audit(&s.records, &s.cloud_a, &s.cloud_b, &regions);
            let max_grad = rows.iter().map(|r| r.grad_slack).fold(0.0, f64::max);
            slacks.push(max_grad);
            hs.push(s.cloud_a.h);
        }
        assert!(slacks[0] > slacks[1] && slacks[1] > slacks[2], "{slacks:?}");
        let c = fit_slope(&hs, &slacks);
        assert!(c > 0.0 && c < 1.0, "fitted slope {c}");
        for (h, s) in hs.iter().zip(&slacks) {
            assert!(*s <= 2.0 * c * h + 1e-9);
        }
    }

    #[test]
    fn gradient_image_nearly_additive() {
        // disjoint regions: the gradient-image mass behaves like a measure
        // up to the h-band overlap at shared cluster boundaries
        let s = setup("p2-simplex", 4, 1e-7);
        let fi = 0;
        let idx: Vec<usize> = (0..s.cloud_a.points.len())
            .filter(|&i| s.cloud_a.points[i].facet == fi)
            .collect();
        let half = idx.len() / 2;
        let e = Region { name: "e".into(), indices: idx[..half].to_vec() };
        let f = Region { name: "f".into(), indices: idx[half..].to_vec() };
        let ef = Region { name: "ef".into(), indices: idx.clone() };
        let rows = inequality_audit(&s.records, &s.cloud_a, &s.cloud_b, &[e, f, ef]);
        let (me, mf, mef) = (
            rows[0].grad_image_mass,
            rows[1].grad_image_mass,
            rows[2].grad_image_mass,
        );
        assert!(mef <= me + mf + 1e-12); // subadditive exactly
        assert!(me + mf - mef <= 4.0 * s.cloud_a.h, "overlap {}", me + mf - mef);
    }

    #[test]
    fn roundtrip_p2() {
        let s = setup("p2-simplex", 4, 1e-7);
        let swapped = swap_result(&s);
        let rec_b = conjugate_sets(
            &swapped, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, s.delta,
            4.0 * s.cloud_a.h,
        );
        let rep_b = classify(&rec_b, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, s.delta);
        let rt = duality_roundtrip(&s.report, &rep_b, &s.cloud_a, &s.cloud_b);
        assert!(rt.fraction_within_2h >= 0.95, "{}", rt.fraction_within_2h);
        assert!(rt.good_mass_gap <= 4.0 * s.cloud_a.h);
    }

    #[test]
    fn ma_residual_p2_decreases() {
        let mut maxes = Vec::new();
        for depth in [2usize, 3, 4] {
            let s = setup("p2-simplex", depth, 1e-7);
            let rep = ma_residual(&s.records, &s.cloud_a, &s.cloud_b, 1.0 / 3.0, true);
            assert!(rep.applicable);
            maxes.push(rep.max_relative);
            // cell measures add up to the boundary measure 9
            let total: f64 = rep.cells.iter().map(|c| c.cell_measure).sum();
            assert!((total - 9.0).abs() < 1e-9);
        }
        assert!(maxes[0] > maxes[1] && maxes[1] > maxes[2], "{maxes:?}");
    }

    #[test]
    fn anomalous_rigidity_sampled() {
        // for type-II samples, conjugates of their gradients on the other
        // side must stay inside the sample's own facet band (vacuous when
        // no type-II points arise)
        for name in ["p2-simplex", "hexagon-eps-14"] {
            let s = setup(name, 3, 1e-7);
            let swapped = swap_result(&s);
            let rec_b = conjugate_sets(
                &swapped, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, s.delta,
                4.0 * s.cloud_a.h,
            );
            for (rec, class) in s.report.records.iter().zip(&s.report.classes) {
                if *class != Classification::GoodTypeII {
                    continue;
                }
                let fi = s.cloud_a.points[rec.sample].facet;
                let facet = &s.complex_a.facets[fi];
                for &g in &rec.gradients {
                    for &x in &rec_b[g].conjugates {
                        let p = &s.cloud_a.points[x].pos;
                        let margin = crate::linalg::rat_to_f64(&facet.offset)
                            - crate::linalg::rat_to_f64(&facet.label.dot_rat(p));
                        assert!(
                            margin.abs() <= 4.0 * s.cloud_a.h,
                            "{name}: rigidity violated by margin {margin}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn convexity_of_extension() {
        let s = setup("p2-simplex", 3, 1e-7);
        let ext = crate::ctransform::extend_to_ambient(&s.result.phi, &s.cloud_a, &s.cloud_b)
            .unwrap();
        for facet in 0..s.complex_a.facets.len() {
            let rep = convexity_check(&ext, &s.records, &s.cloud_a, &s.cloud_b, facet, 1000, 5);
            assert!(rep.max_midpoint_defect <= 1e-10);
            assert!(rep.max_slope_excess <= 1e-9);
            assert_eq!(rep.subgradient_agreement, 1.0);
        }
    }

    #[test]
    fn delta_rules() {
        let s = setup("p2-simplex", 2, 1e-7);
        let cfg = AnalysisConfig::default();
        let d = cfg.delta(&s.cloud_a, &s.cloud_b);
        let r = s
            .cloud_b
            .points
            .iter()
            .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        assert!((d - 4.0 * s.cloud_a.h * r).abs() < 1e-12);
        assert!(r > 1.0 && r < 2.0_f64.sqrt());
        let abs = AnalysisConfig {
            delta_rule: DeltaRule::Absolute(0.5),
            ..AnalysisConfig::default()
        };
        assert_eq!(abs.delta(&s.cloud_a, &s.cloud_b), 0.5);
    }
}
