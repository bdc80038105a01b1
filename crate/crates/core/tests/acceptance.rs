//! Acceptance suite: one test per release criterion, each ending in a
//! single PASS line (a panic anywhere is the FAIL line).

use polyot::analysis::{
    classify, conjugate_sets, default_regions, duality_roundtrip, fit_slope, inequality_audit,
    ma_residual,
};
use polyot::ctransform::{c_transform, Potential};
use polyot::instance::{example, example_catalog, Instance};
use polyot::linalg::{rat, rat_to_f64, Rat};
use polyot::mesh::{triangulate_refine, SampleCloud};
use polyot::polytope::{
    dual_polytope, h_split, pairing_matrix, BoundaryComplex, LatticeVector,
};
use polyot::report::degree_check;
use polyot::solver::{
    solve_entropic, solve_lp_oracle, Method, SolveResult, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Scene {
    complex_a: BoundaryComplex,
    complex_b: BoundaryComplex,
    cloud_a: SampleCloud,
    cloud_b: SampleCloud,
}

fn scene(name: &str, depth: usize) -> Scene {
    let inst = example(name).unwrap();
    let complex_a = inst.pair.dual_side_boundary().unwrap();
    let complex_b = inst.pair.primal_side_boundary().unwrap();
    let cloud_a = triangulate_refine(&complex_a, depth).unwrap();
    let cloud_b = triangulate_refine(&complex_b, depth).unwrap();
    Scene { complex_a, complex_b, cloud_a, cloud_b }
}

fn vertex_set(v: &[LatticeVector]) -> std::collections::BTreeSet<Vec<i64>> {
    v.iter().map(|x| x.0.clone()).collect()
}

const DELTA: f64 = 1e-7;

fn analyzed(s: &Scene) -> (SolveResult, polyot::analysis::AnalysisReport) {
    let result = solve_lp_oracle(&s.cloud_a, &s.cloud_b, &SolverConfig::default()).unwrap();
    let rec = conjugate_sets(
        &result, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA,
        4.0 * s.cloud_b.h,
    );
    let report = classify(&rec, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA);
    (result, report)
}

#[test]
fn criterion_1_geometry_exactness() {
    // hexagon dual vertices are exactly +-(1,0), +-(1,1), +-(0,1)
    let hex = example("hexagon-eps-14").unwrap();
    let dual = dual_polytope(&hex.pair.delta_vertices).unwrap();
    let want: Vec<LatticeVector> = [
        [1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1],
    ]
    .iter()
    .map(|c| LatticeVector::new(c.to_vec()))
    .collect();
    assert_eq!(vertex_set(&dual), vertex_set(&want));

    // projective-simplex pairing matrix: up to vertex ordering, -(d+1) on
    // the diagonal and 1 off it, for hypersurfaces of dimension d = dim - 1
    for (name, dim) in [("p2-simplex", 2usize), ("p3-simplex", 3)] {
        let inst = example(name).unwrap();
        let m = pairing_matrix(&inst.pair);
        let check = |vals: Vec<i64>| {
            let low = vals.iter().filter(|&&v| v == -(dim as i64)).count();
            let one = vals.iter().filter(|&&v| v == 1).count();
            assert!(low == 1 && one == vals.len() - 1, "{name}: {vals:?}");
        };
        for row in &m {
            check(row.clone());
        }
        for j in 0..m.len() {
            check(m.iter().map(|row| row[j]).collect());
        }
    }

    // duality is an involution on every bundled example
    for (name, _) in example_catalog() {
        let inst = example(name).unwrap();
        let dual = dual_polytope(&inst.pair.delta_vertices).unwrap();
        let back = dual_polytope(&dual).unwrap();
        assert_eq!(
            vertex_set(&back),
            vertex_set(&inst.pair.delta_vertices),
            "involution failed on {name}"
        );
        assert_eq!(vertex_set(&dual), vertex_set(&inst.pair.dual_vertices), "{name}");
    }
    println!("criterion 1 (geometry exactness): PASS");
}

#[test]
fn criterion_2_transform_axioms() {
    const TOL: f64 = 1e-10;
    for (name, _) in example_catalog() {
        let s = scene(name, 1);
        let n = s.cloud_a.points.len();
        let r_a = s
            .cloud_a
            .points
            .iter()
            .map(|p| p.position.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..1000 {
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = Potential::new(s.cloud_a.side, vals.clone());
            let (fc, _) = c_transform(&f, &s.cloud_a, &s.cloud_b).unwrap();
            let (fcc, _) = c_transform(&fc, &s.cloud_b, &s.cloud_a).unwrap();
            let (fccc, _) = c_transform(&fcc, &s.cloud_a, &s.cloud_b).unwrap();

            // f^cc <= f and triple transform reproduces the first
            for i in 0..n {
                assert!(fcc.values[i] <= vals[i] + TOL, "{name}: fcc > f");
            }
            for (a, b) in fccc.values.iter().zip(&fc.values) {
                assert!((a - b).abs() <= TOL, "{name}: triple transform drift");
            }

            // Lipschitz bound by the source radius
            for (j, pj) in s.cloud_b.points.iter().enumerate() {
                for (k, pk) in s.cloud_b.points.iter().enumerate().skip(j + 1) {
                    let dist = pj
                        .position
                        .iter()
                        .zip(&pk.position)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    assert!(
                        (fc.values[j] - fc.values[k]).abs() <= r_a * dist + TOL,
                        "{name}: Lipschitz bound violated"
                    );
                }
            }

            if let Some((pvals, pc)) = &prev {
                // order reversal: f <= g pointwise forces f^c >= g^c
                let dom: Vec<f64> = vals
                    .iter()
                    .zip(pvals)
                    .map(|(a, b)| a.max(*b) + 0.5)
                    .collect();
                let (domc, _) = c_transform(
                    &Potential::new(s.cloud_a.side, dom),
                    &s.cloud_a,
                    &s.cloud_b,
                )
                .unwrap();
                for (a, b) in domc.values.iter().zip(&fc.values) {
                    assert!(*a <= b + TOL, "{name}: order reversal");
                }
                // contraction in the sup norm
                let lhs = fc
                    .values
                    .iter()
                    .zip(pc)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let rhs = vals
                    .iter()
                    .zip(pvals)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(lhs <= rhs + TOL, "{name}: contraction {lhs} > {rhs}");
            }
            prev = Some((vals, fc.values.clone()));
        }
    }
    println!("criterion 2 (transform axioms): PASS");
}

#[test]
fn criterion_3_solver_cross_validation() {
    for (name, depth, floor) in [("p2-simplex", 4usize, 1e-9), ("hexagon-eps-14", 3, 1e-7)] {
        let s = scene(name, depth);
        assert!(s.cloud_a.points.len() <= 500 && s.cloud_b.points.len() <= 500);
        let oracle =
            solve_lp_oracle(&s.cloud_a, &s.cloud_b, &SolverConfig::default()).unwrap();
        assert!(oracle.duality_gap.abs() <= 1e-8, "{name}: gap {}", oracle.duality_gap);

        let cfg = |seed| SolverConfig {
            method: Method::Entropic,
            epsilon_floor: Some(floor),
            seed,
            ..SolverConfig::default()
        };
        let ent = solve_entropic(&s.cloud_a, &s.cloud_b, &cfg(0)).unwrap();
        assert!(
            (ent.functional_value - oracle.functional_value).abs() <= 1e-6,
            "{name}: values {} vs {}",
            ent.functional_value,
            oracle.functional_value
        );

        // normalized potentials agree across random initializations
        let ent2 = solve_entropic(&s.cloud_a, &s.cloud_b, &cfg(99)).unwrap();
        let diff = ent
            .phi
            .values
            .iter()
            .zip(&ent2.phi.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-6, "{name}: potentials differ by {diff}");
    }
    println!("criterion 3 (solver cross-validation): PASS");
}

#[test]
fn criterion_4_inequality_audit() {
    let mut hs = Vec::new();
    let mut slacks = Vec::new();
    for depth in [2usize, 3, 4] {
        let s = scene("p2-simplex", depth);
        let result = solve_lp_oracle(&s.cloud_a, &s.cloud_b, &SolverConfig::default()).unwrap();
        let rec = conjugate_sets(
            &result, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA,
            4.0 * s.cloud_b.h,
        );
        let regions = default_regions(&s.cloud_a, &s.complex_a, 50, 17);
        let rows = inequality_audit(&rec, &s.cloud_a, &s.cloud_b, &regions);
        let worst = rows
            .iter()
            .map(|r| r.conj_slack.max(r.grad_slack))
            .fold(0.0, f64::max);
        hs.push(s.cloud_a.h);
        slacks.push(worst);
    }
    let c = fit_slope(&hs, &slacks);
    assert!(c >= 0.0);
    for (h, s) in hs.iter().zip(&slacks) {
        // conj-image mass >= mass - rho(h), grad-image mass <= mass + rho(h)
        assert!(*s <= 2.0 * c * h + 1e-9, "slack {s} exceeds rho({h}) = {}", c * h);
    }
    // fitted rho(h) decreases with h
    assert!(c * hs[0] > c * hs[1] && c * hs[1] > c * hs[2]);
    assert!(slacks[0] >= slacks[2], "slack did not shrink: {slacks:?}");
    println!("criterion 4 (variational inequality audit): PASS");
}

#[test]
fn criterion_5_good_bad_decomposition() {
    // instances with no zero pairings carry no bad mass at any depth
    for name in ["p2-simplex", "p1xp2-product"] {
        let mut singular = Vec::new();
        for depth in [2usize, 3] {
            let s = scene(name, depth);
            let (_, report) = analyzed(&s);
            assert_eq!(report.bad_mass, 0.0, "{name} depth {depth}");
            singular.push(report.singular_mass);
        }
        assert!(singular[1] <= singular[0] && singular[1] <= 0.2, "{name}: {singular:?}");
    }

    // the perturbed hexagon: find the facets where the normalized facet
    // measure exceeds the normalized positive-pairing section measure,
    // exactly in rational arithmetic
    let s = scene("hexagon-eps-14", 6);
    let total_a = &s.complex_a.total_lattice_measure;
    let total_b = &s.complex_b.total_lattice_measure;
    let mut gap = Rat::from_integer(0.into());
    let mut violating = 0usize;
    for facet in &s.complex_a.facets {
        let frac = facet.lattice_area.clone() / total_a.clone();
        let split = h_split(&s.complex_b, &facet.label).unwrap();
        let plus: Rat = split
            .plus_facets
            .iter()
            .map(|&i| s.complex_b.facets[i].lattice_area.clone())
            .sum();
        let plus = plus / total_b.clone();
        if frac > plus {
            violating += 1;
            assert_eq!(frac, rat(1, 6), "facet fraction for {:?}", facet.label);
            assert_eq!(plus, rat(1, 9), "section fraction for {:?}", facet.label);
            gap = frac - plus;
        }
    }
    assert_eq!(violating, 2);
    let threshold = rat_to_f64(&gap) / 2.0;
    assert!((threshold - 1.0 / 36.0).abs() < 1e-15);

    let (_, report) = analyzed(&s);
    assert!(
        report.bad_mass >= threshold,
        "bad mass {} below {threshold}",
        report.bad_mass
    );
    println!("criterion 5 (good-bad decomposition): PASS");
}

#[test]
fn criterion_6_monge_ampere_residual() {
    let inst: Instance = example("p2-simplex").unwrap();
    let complex_a = inst.pair.dual_side_boundary().unwrap();
    let complex_b = inst.pair.primal_side_boundary().unwrap();
    let c0_exact = complex_b.total_lattice_measure.clone()
        / complex_a.total_lattice_measure.clone();
    assert_eq!(c0_exact, rat(1, 3));
    let c0 = rat_to_f64(&c0_exact);

    let mut primal_path = Vec::new();
    let mut dual_path = Vec::new();
    for depth in [2usize, 3, 4, 5, 6] {
        let s = scene("p2-simplex", depth);
        let result = solve_lp_oracle(&s.cloud_a, &s.cloud_b, &SolverConfig::default()).unwrap();
        let rec = conjugate_sets(
            &result, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA,
            4.0 * s.cloud_b.h,
        );
        let ma = ma_residual(&rec, &s.cloud_a, &s.cloud_b, c0, true);
        primal_path.push(ma.max_relative);

        let swapped = SolveResult {
            phi: result.phi_star.clone(),
            phi_star: result.phi.clone(),
            plan: None,
            duality_gap: result.duality_gap,
            functional_value: result.functional_value,
        };
        let rec_b = conjugate_sets(
            &swapped, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, DELTA,
            4.0 * s.cloud_a.h,
        );
        let ma_dual = ma_residual(&rec_b, &s.cloud_b, &s.cloud_a, 1.0 / c0, true);
        dual_path.push(ma_dual.max_relative);
    }
    for path in [&primal_path, &dual_path] {
        assert!(path.windows(2).all(|w| w[1] < w[0]), "not decreasing: {path:?}");
        assert!(*path.last().unwrap() <= 0.10, "finest residual {path:?}");
    }
    println!("criterion 6 (real Monge-Ampere residual): PASS");
}

#[test]
fn criterion_7_legendre_roundtrip() {
    let s = scene("p2-simplex", 6);
    let result = solve_lp_oracle(&s.cloud_a, &s.cloud_b, &SolverConfig::default()).unwrap();
    let rec_a = conjugate_sets(
        &result, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA,
        4.0 * s.cloud_b.h,
    );
    let report_a = classify(&rec_a, &s.cloud_a, &s.cloud_b, &s.complex_a, &s.complex_b, DELTA);
    let swapped = SolveResult {
        phi: result.phi_star.clone(),
        phi_star: result.phi.clone(),
        plan: None,
        duality_gap: result.duality_gap,
        functional_value: result.functional_value,
    };
    let rec_b = conjugate_sets(
        &swapped, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, DELTA,
        4.0 * s.cloud_a.h,
    );
    let report_b = classify(&rec_b, &s.cloud_b, &s.cloud_a, &s.complex_b, &s.complex_a, DELTA);
    let rt = duality_roundtrip(&report_a, &report_b, &s.cloud_a, &s.cloud_b);
    assert!(rt.fraction_within_2h >= 0.95, "roundtrip fraction {}", rt.fraction_within_2h);
    assert!(rt.good_mass_gap <= 4.0 * s.cloud_a.h, "good mass gap {}", rt.good_mass_gap);
    println!("criterion 7 (Legendre duality round-trip): PASS");
}

#[test]
fn criterion_8_degree_counts() {
    let inst = example("p2-simplex").unwrap();
    let rows = degree_check(&inst.pair, 6).unwrap();
    for row in &rows {
        let expected = match row.side {
            polyot::polytope::Side::Primal => 3 * row.k,
            polyot::polytope::Side::Dual => 9 * row.k,
        };
        assert_eq!(row.count, expected as u64, "side {:?} k {}", row.side, row.k);
        assert_eq!(row.ratio, row.target, "ratio at k {}", row.k);
    }
    // total boundary measure of the dual pairs with the anticanonical
    // self-intersection: d! * integral dp = 9
    let dual_target = rows
        .iter()
        .find(|r| r.side == polyot::polytope::Side::Dual)
        .unwrap()
        .target;
    assert_eq!(dual_target, 9.0);
    let area = polyot::polytope::facets_of_hull(
        &inst
            .pair
            .dual_vertices
            .iter()
            .map(|v| v.to_rational())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(area.len(), 3);
    println!("criterion 8 (degree counts): PASS");
}
