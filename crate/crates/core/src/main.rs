use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polyot::analysis::{AnalysisConfig, DeltaRule};
use polyot::instance::{example, example_catalog, load_instance, Instance};
use polyot::mesh::{cloud_to_csv, triangulate_refine};
use polyot::polytope::{dual_polytope, pairing_condition, pairing_matrix};
use polyot::report::{degree_check, degree_to_csv, fmt_f64, run, RunConfig};
use polyot::solver::{Method, SolverConfig};

#[derive(Parser)]
#[command(
    name = "polyot",
    about = "Variational transport between boundaries of weighted reflexive polytope pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// path to a TOML instance file
    #[arg(long)]
    instance: Option<PathBuf>,
    /// name of a bundled example (see `polyot examples`)
    #[arg(long)]
    example: Option<String>,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance, String> {
        match (&self.instance, &self.example) {
            (Some(path), None) => load_instance(path).map_err(|e| e.to_string()),
            (None, Some(name)) => example(name).map_err(|e| e.to_string()),
            _ => Err("give exactly one of --instance or --example".into()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Oracle,
    Entropic,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Entropic => Method::Entropic,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// floor of the entropic epsilon schedule (default 0.25 h^2)
    #[arg(long)]
    epsilon_floor: Option<f64>,
    #[arg(long, default_value_t = 20000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1_000_000)]
    size_cap: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            method: self.method.into(),
            tol: self.tol,
            epsilon_schedule: None,
            epsilon_floor: self.epsilon_floor,
            max_iterations: self.max_iterations,
            seed: self.seed,
            size_cap: self.size_cap,
        }
    }
}

#[derive(Args)]
struct AnalysisArgs {
    /// conjugacy slack as a multiple of h * R (mesh scale)
    #[arg(long, default_value_t = 4.0)]
    delta_factor: f64,
    /// absolute conjugacy slack; overrides --delta-factor
    #[arg(long)]
    delta_abs: Option<f64>,
    #[arg(long, default_value_t = 50)]
    regions: usize,
    #[arg(long, default_value_t = 4.0)]
    separation_factor: f64,
}

impl AnalysisArgs {
    fn config(&self, seed: u64) -> AnalysisConfig {
        AnalysisConfig {
            delta_rule: match self.delta_abs {
                Some(a) => DeltaRule::Absolute(a),
                None => DeltaRule::FactorHR(self.delta_factor),
            },
            separation_factor: self.separation_factor,
            region_count: self.regions,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the dual polytope's vertices
    Dual {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Report the pairing condition and the pairing matrix
    Check {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Write sample clouds for one depth
    Mesh {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve at one depth and print the optimum summary
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and run the full structure analysis at one depth
    Analyze {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline across several depths with artifacts on disk
    Run {
        #[command(flatten)]
        inst: InstanceArgs,
        /// comma-separated increasing list, e.g. 2,3,4
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
        depths: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// List bundled example instances (optionally write them as TOML files)
    Examples {
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Boundary lattice point counts of dilates vs boundary measures
    Degree {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = 6)]
        kmax: i64,
    },
}

fn real_main() -> Result<i32, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Dual { inst } => {
            let instance = inst.load()?;
            let dual = dual_polytope(&instance.pair.delta_vertices)
                .map_err(|e| e.to_string())?;
            for v in dual {
                println!("{v:?}");
            }
            Ok(0)
        }
        Command::Check { inst } => {
            let instance = inst.load()?;
            let report = pairing_condition(&instance.pair);
            println!("pairing condition holds: {}", report.holds());
            for (i, j) in &report.violations {
                println!(
                    "zero pairing: delta[{i}] = {:?} with dual[{j}] = {:?}",
                    instance.pair.delta_vertices[*i], instance.pair.dual_vertices[*j]
                );
            }
            println!("pairing matrix (rows = delta vertices):");
            for row in pairing_matrix(&instance.pair) {
                println!("  {row:?}");
            }
            Ok(0)
        }
        Command::Mesh { inst, depth, out } => {
            let instance = inst.load()?;
            let ca = instance.pair.dual_side_boundary().map_err(|e| e.to_string())?;
            let cb = instance
                .pair
                .primal_side_boundary()
                .map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            for (complex, tag) in [(&ca, "dual"), (&cb, "primal")] {
                let cloud = triangulate_refine(complex, depth).map_err(|e| e.to_string())?;
                let path = out.join(format!("cloud_{tag}_depth{depth}.csv"));
                std::fs::write(&path, cloud_to_csv(&cloud, complex))
                    .map_err(|e| e.to_string())?;
                println!(
                    "{}: {} samples, h = {}",
                    path.display(),
                    cloud.points.len(),
                    fmt_f64(cloud.h)
                );
            }
            Ok(0)
        }
        Command::Solve {
            inst,
            depth,
            solver,
            out,
        } => {
            let instance = inst.load()?;
            let ca = instance.pair.dual_side_boundary().map_err(|e| e.to_string())?;
            let cb = instance
                .pair
                .primal_side_boundary()
                .map_err(|e| e.to_string())?;
            let a = triangulate_refine(&ca, depth).map_err(|e| e.to_string())?;
            let b = triangulate_refine(&cb, depth).map_err(|e| e.to_string())?;
            let result = polyot::solver::solve(&a, &b, &solver.config())
                .map_err(|e| e.to_string())?;
            println!(
                "functional value = {}",
                fmt_f64(result.functional_value)
            );
            println!("duality gap = {}", fmt_f64(result.duality_gap));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                std::fs::write(
                    dir.join(format!("potential_phi_depth{depth}.csv")),
                    polyot::ctransform::potential_to_csv(&result.phi),
                )
                .map_err(|e| e.to_string())?;
                std::fs::write(
                    dir.join(format!("potential_phi_star_depth{depth}.csv")),
                    polyot::ctransform::potential_to_csv(&result.phi_star),
                )
                .map_err(|e| e.to_string())?;
                if let Some(plan) = &result.plan {
                    std::fs::write(
                        dir.join(format!("plan_depth{depth}.csv")),
                        polyot::solver::plan_to_csv(plan),
                    )
                    .map_err(|e| e.to_string())?;
                }
            }
            Ok(0)
        }
        Command::Analyze {
            inst,
            depth,
            solver,
            analysis,
            out,
        } => {
            let instance = inst.load()?;
            let out_dir = out.unwrap_or_else(std::env::temp_dir);
            let config = RunConfig {
                instance,
                depths: vec![depth],
                solver: solver.config(),
                analysis: analysis.config(solver.seed),
                out_dir,
            };
            let outcome = run(&config).map_err(|e| e.to_string())?;
            let d = &outcome.depth_results[0];
            println!(
                "type-1 good mass = {}",
                fmt_f64(d.report_a.type1_mass)
            );
            println!(
                "type-2 good mass = {}",
                fmt_f64(d.report_a.type2_mass)
            );
            println!("bad mass = {}", fmt_f64(d.report_a.bad_mass));
            println!("singular mass = {}", fmt_f64(d.report_a.singular_mass));
            println!(
                "roundtrip fraction within 2h = {}",
                fmt_f64(d.roundtrip.fraction_within_2h)
            );
            println!(
                "max Monge-Ampere residual = {} (applicable: {})",
                fmt_f64(d.ma.max_relative),
                d.ma.applicable
            );
            Ok(outcome.exit_code())
        }
        Command::Run {
            inst,
            depths,
            solver,
            analysis,
            out,
        } => {
            let instance = inst.load()?;
            let pairing = pairing_condition(&instance.pair);
            if !pairing.holds() {
                eprintln!(
                    "warning: pairing condition violated for {} vertex pair(s); structure theorems do not apply",
                    pairing.violations.len()
                );
            }
            let config = RunConfig {
                instance,
                depths,
                solver: solver.config(),
                analysis: analysis.config(solver.seed),
                out_dir: out,
            };
            let outcome = run(&config).map_err(|e| e.to_string())?;
            for d in &outcome.depth_results {
                println!(
                    "depth {}: F = {}, bad mass = {}, max MA residual = {}",
                    d.depth,
                    fmt_f64(d.result.functional_value),
                    fmt_f64(d.report_a.bad_mass),
                    fmt_f64(d.ma.max_relative)
                );
            }
            for v in &outcome.audit_violations {
                eprintln!("audit violation: {v}");
            }
            Ok(outcome.exit_code())
        }
        Command::Examples { write } => {
            for (name, text) in example_catalog() {
                println!("{name}");
                if let Some(dir) = &write {
                    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                    std::fs::write(dir.join(format!("{name}.toml")), &text)
                        .map_err(|e| e.to_string())?;
                }
            }
            Ok(0)
        }
        Command::Degree { inst, kmax } => {
            let instance = inst.load()?;
            let rows = degree_check(&instance.pair, kmax).map_err(|e| e.to_string())?;
            print!("{}", degree_to_csv(&rows));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
