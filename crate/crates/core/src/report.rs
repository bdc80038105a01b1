//! Batch pipeline: geometry -> mesh -> solve -> analyze across a list of
//! refinement depths, with all artifacts written as diffable CSV/text.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{
    audit_to_csv, classification_to_csv, classify, conjugate_sets, default_regions,
    duality_roundtrip, fit_slope, inequality_audit, ma_residual, ma_to_csv,
    AnalysisConfig, AnalysisReport, MaResidualReport, RoundtripStats,
};
use crate::ctransform::potential_to_csv;
use crate::instance::{Instance, InstanceError};
use crate::linalg::{format_rat, rat_to_f64};
use crate::mesh::{cloud_to_csv, triangulate_refine, MeshError, SampleCloud};
use crate::polytope::{
    count_boundary_lattice_points, pairing_condition, pairing_matrix, weighted_boundary,
    BoundaryComplex, GeometryError, Side, WeightedPolytopePair,
};
use crate::solver::{plan_to_csv, solve, SolveResult, SolverConfig, SolverError};

/// 17 significant digits: round-trippable f64, diffable across reruns.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid run config: {0}")]
    Config(String),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub instance: Instance,
    /// strictly increasing, nonempty
    pub depths: Vec<usize>,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.depths.is_empty() {
            return Err(RunError::Config("depth list is empty".into()));
        }
        if !self.depths.windows(2).all(|w| w[0] < w[1]) {
            return Err(RunError::Config(
                "depths must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Everything computed at one depth.
pub struct DepthResult {
    pub depth: usize,
    pub cloud_a: SampleCloud,
    pub cloud_b: SampleCloud,
    pub result: SolveResult,
    pub report_a: AnalysisReport,
    pub report_b: AnalysisReport,
    pub roundtrip: RoundtripStats,
    pub ma: MaResidualReport,
    pub ma_dual: MaResidualReport,
    pub max_conj_slack: f64,
    pub max_grad_slack: f64,
}

pub struct RunOutcome {
    pub depth_results: Vec<DepthResult>,
    /// fitted constants of the rho(h) = C h tolerance for the two audits
    pub conj_slope: f64,
    pub grad_slope: f64,
    pub audit_violations: Vec<String>,
    pub pairing_holds: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.audit_violations.is_empty() {
            0
        } else {
            2
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Human-readable description of the pair and its boundary complexes.
pub fn complex_summary(
    pair: &WeightedPolytopePair,
    complex_a: &BoundaryComplex,
    complex_b: &BoundaryComplex,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dimension: {}", pair.dim());
    let _ = writeln!(s, "delta vertices: {:?}", pair.delta_vertices);
    let _ = writeln!(s, "dual vertices: {:?}", pair.dual_vertices);
    let _ = writeln!(
        s,
        "lambda: [{}]",
        pair.lambda.iter().map(format_rat).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(
        s,
        "mu: [{}]",
        pair.mu.iter().map(format_rat).collect::<Vec<_>>().join(", ")
    );
    let report = pairing_condition(pair);
    let _ = writeln!(s, "pairing condition holds: {}", report.holds());
    if !report.holds() {
        for (i, j) in &report.violations {
            let _ = writeln!(
                s,
                "  zero pairing: delta[{i}] = {:?} with dual[{j}] = {:?}",
                pair.delta_vertices[*i], pair.dual_vertices[*j]
            );
        }
    }
    let _ = writeln!(s, "pairing matrix (rows = delta vertices):");
    for row in pairing_matrix(pair) {
        let _ = writeln!(s, "  {row:?}");
    }
    for (tag, c) in [("dual-side", complex_a), ("primal-side", complex_b)] {
        let _ = writeln!(
            s,
            "{tag} boundary: total lattice measure {}",
            format_rat(&c.total_lattice_measure)
        );
        for f in &c.facets {
            let _ = writeln!(
                s,
                "  facet {:?}: offset {}, lattice measure {}, {} vertices",
                f.label,
                format_rat(&f.offset),
                format_rat(&f.lattice_area),
                f.vertices.len()
            );
        }
    }
    s
}

/// Run one depth of the pipeline without touching the filesystem.
pub fn run_depth(
    pair: &WeightedPolytopePair,
    complex_a: &BoundaryComplex,
    complex_b: &BoundaryComplex,
    depth: usize,
    solver: &SolverConfig,
    analysis: &AnalysisConfig,
) -> Result<DepthResult, RunError> {
    let cloud_a = triangulate_refine(complex_a, depth)?;
    let cloud_b = triangulate_refine(complex_b, depth)?;
    let result = solve(&cloud_a, &cloud_b, solver)?;
    let delta = analysis.delta(&cloud_a, &cloud_b);
    let rec_a = conjugate_sets(
        &result,
        &cloud_a,
        &cloud_b,
        complex_a,
        complex_b,
        delta,
        analysis.separation_factor * cloud_b.h,
    );
    let report_a = classify(&rec_a, &cloud_a, &cloud_b, complex_a, complex_b, delta);
    let swapped = SolveResult {
        phi: result.phi_star.clone(),
        phi_star: result.phi.clone(),
        plan: None,
        duality_gap: result.duality_gap,
        functional_value: result.functional_value,
    };
    let rec_b = conjugate_sets(
        &swapped,
        &cloud_b,
        &cloud_a,
        complex_b,
        complex_a,
        delta,
        analysis.separation_factor * cloud_a.h,
    );
    let report_b = classify(&rec_b, &cloud_b, &cloud_a, complex_b, complex_a, delta);
    let roundtrip = duality_roundtrip(&report_a, &report_b, &cloud_a, &cloud_b);
    let applicable = pairing_condition(pair).holds();
    let c0 = rat_to_f64(&complex_b.total_lattice_measure)
        / rat_to_f64(&complex_a.total_lattice_measure);
    let ma = ma_residual(&rec_a, &cloud_a, &cloud_b, c0, applicable);
    let ma_dual = ma_residual(&rec_b, &cloud_b, &cloud_a, 1.0 / c0, applicable);
    let regions = default_regions(&cloud_a, complex_a, analysis.region_count, analysis.seed);
    let audit = inequality_audit(&rec_a, &cloud_a, &cloud_b, &regions);
    let max_conj_slack = audit.iter().map(|r| r.conj_slack).fold(0.0, f64::max);
    let max_grad_slack = audit.iter().map(|r| r.grad_slack).fold(0.0, f64::max);
    Ok(DepthResult {
        depth,
        cloud_a,
        cloud_b,
        result,
        report_a,
        report_b,
        roundtrip,
        ma,
        ma_dual,
        max_conj_slack,
        max_grad_slack,
    })
}

pub fn convergence_csv(outcome: &RunOutcome) -> String {
    let mut s = String::from(
        "depth,h,samples_dual,samples_primal,functional,duality_gap,type1_mass,type2_mass,bad_mass,singular_mass,roundtrip_fraction,ma_max_residual,ma_dual_max_residual,max_conj_slack,max_grad_slack\n",
    );
    for d in &outcome.depth_results {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            d.depth,
            fmt_f64(d.cloud_a.h),
            d.cloud_a.points.len(),
            d.cloud_b.points.len(),
            fmt_f64(d.result.functional_value),
            fmt_f64(d.result.duality_gap),
            fmt_f64(d.report_a.type1_mass),
            fmt_f64(d.report_a.type2_mass),
            fmt_f64(d.report_a.bad_mass),
            fmt_f64(d.report_a.singular_mass),
            fmt_f64(d.roundtrip.fraction_within_2h),
            fmt_f64(d.ma.max_relative),
            fmt_f64(d.ma_dual.max_relative),
            fmt_f64(d.max_conj_slack),
            fmt_f64(d.max_grad_slack),
        ));
    }
    s
}

/// Full pipeline: all depths, artifacts under `out_dir`, audit verdict.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|source| RunError::Io {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let pair = &config.instance.pair;
    let complex_a = pair.dual_side_boundary()?;
    let complex_b = pair.primal_side_boundary()?;
    write_file(
        &config.out_dir,
        "complex_summary.txt",
        &complex_summary(pair, &complex_a, &complex_b),
    )?;
    let mut depth_results = Vec::new();
    for &depth in &config.depths {
        let d = run_depth(
            pair,
            &complex_a,
            &complex_b,
            depth,
            &config.solver,
            &config.analysis,
        )?;
        let dir = &config.out_dir;
        write_file(
            dir,
            &format!("cloud_dual_depth{depth}.csv"),
            &cloud_to_csv(&d.cloud_a, &complex_a),
        )?;
        write_file(
            dir,
            &format!("cloud_primal_depth{depth}.csv"),
            &cloud_to_csv(&d.cloud_b, &complex_b),
        )?;
        write_file(
            dir,
            &format!("potential_phi_depth{depth}.csv"),
            &potential_to_csv(&d.result.phi),
        )?;
        write_file(
            dir,
            &format!("potential_phi_star_depth{depth}.csv"),
            &potential_to_csv(&d.result.phi_star),
        )?;
        if let Some(plan) = &d.result.plan {
            write_file(dir, &format!("plan_depth{depth}.csv"), &plan_to_csv(plan))?;
        }
        write_file(
            dir,
            &format!("classification_depth{depth}.csv"),
            &classification_to_csv(&d.report_a),
        )?;
        write_file(
            dir,
            &format!("classification_dual_depth{depth}.csv"),
            &classification_to_csv(&d.report_b),
        )?;
        let regions =
            default_regions(&d.cloud_a, &complex_a, config.analysis.region_count, config.analysis.seed);
        let audit = inequality_audit(&d.report_a.records, &d.cloud_a, &d.cloud_b, &regions);
        write_file(dir, &format!("audit_depth{depth}.csv"), &audit_to_csv(&audit))?;
        write_file(dir, &format!("ma_depth{depth}.csv"), &ma_to_csv(&d.ma))?;
        write_file(
            dir,
            &format!("ma_dual_depth{depth}.csv"),
            &ma_to_csv(&d.ma_dual),
        )?;
        depth_results.push(d);
    }
    let hs: Vec<f64> = depth_results.iter().map(|d| d.cloud_a.h).collect();
    let conj: Vec<f64> = depth_results.iter().map(|d| d.max_conj_slack).collect();
    let grad: Vec<f64> = depth_results.iter().map(|d| d.max_grad_slack).collect();
    let conj_slope = fit_slope(&hs, &conj);
    let grad_slope = fit_slope(&hs, &grad);
    let mut violations = Vec::new();
    for d in &depth_results {
        let tol_conj = 3.0 * conj_slope * d.cloud_a.h + 1e-9;
        let tol_grad = 3.0 * grad_slope * d.cloud_a.h + 1e-9;
        if d.max_conj_slack > tol_conj {
            violations.push(format!(
                "depth {}: conjugate-image mass deficit {} exceeds rho(h) = {}",
                d.depth,
                fmt_f64(d.max_conj_slack),
                fmt_f64(tol_conj)
            ));
        }
        if d.max_grad_slack > tol_grad {
            violations.push(format!(
                "depth {}: gradient-image mass excess {} exceeds rho(h) = {}",
                d.depth,
                fmt_f64(d.max_grad_slack),
                fmt_f64(tol_grad)
            ));
        }
    }
    let outcome = RunOutcome {
        depth_results,
        conj_slope,
        grad_slope,
        audit_violations: violations,
        pairing_holds: pairing_condition(pair).holds(),
    };
    write_file(&config.out_dir, "convergence.csv", &convergence_csv(&outcome))?;
    let mut status = String::new();
    let _ = writeln!(
        status,
        "instance: {}\npairing condition holds: {}\nfitted conj slope C: {}\nfitted grad slope C: {}",
        config.instance.name,
        outcome.pairing_holds,
        fmt_f64(outcome.conj_slope),
        fmt_f64(outcome.grad_slope)
    );
    if outcome.audit_violations.is_empty() {
        let _ = writeln!(status, "audits: clean");
    } else {
        for v in &outcome.audit_violations {
            let _ = writeln!(status, "audit violation: {v}");
        }
    }
    write_file(&config.out_dir, "status.txt", &status)?;
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct DegreeRow {
    pub side: Side,
    pub k: i64,
    pub count: u64,
    pub ratio: f64,
    pub target: f64,
}

/// Boundary lattice point counts of the k-dilates of both unweighted
/// polytopes against their total boundary lattice measures.
pub fn degree_check(
    pair: &WeightedPolytopePair,
    k_max: i64,
) -> Result<Vec<DegreeRow>, RunError> {
    let dim = pair.dim();
    let mut rows = Vec::new();
    let neg_ones = |n: usize| vec![crate::linalg::rat_i(-1); n];
    // boundary of the primal polytope Delta (halfspaces from dual vertices)
    let primal =
        weighted_boundary(&pair.dual_vertices, &neg_ones(pair.dual_vertices.len()), Side::Primal)?;
    // boundary of the dual polytope Delta-dual
    let dual = weighted_boundary(
        &pair.delta_vertices,
        &neg_ones(pair.delta_vertices.len()),
        Side::Dual,
    )?;
    for (side, verts, complex) in [
        (Side::Primal, &pair.delta_vertices, &primal),
        (Side::Dual, &pair.dual_vertices, &dual),
    ] {
        let target = rat_to_f64(&complex.total_lattice_measure);
        for k in 1..=k_max {
            let count = count_boundary_lattice_points(verts, k)?;
            rows.push(DegreeRow {
                side,
                k,
                count,
                ratio: count as f64 / (k as f64).powi(dim as i32 - 1),
                target,
            });
        }
    }
    Ok(rows)
}

pub fn degree_to_csv(rows: &[DegreeRow]) -> String {
    let mut s = String::from("side,k,boundary_count,count_over_k_pow,target_measure\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.side.tag(),
            r.k,
            r.count,
            fmt_f64(r.ratio),
            fmt_f64(r.target),
        ));
    }
    s
}
