//! Command-line driver: load problems and configs, reformulate, solve,
//! validate out of sample, and run the experiment pipelines. All outputs
//! are deterministic given the config (seeds are explicit) and carry a
//! config hash.

mod schema;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccp_core::ambiguity::{reformulate_problem, ChanceProblem};
use ccp_core::joint::{build_joint_socp, ub_certificate, BoundMode, JointApproxConfig};
use ccp_lab::csv::config_hash;
use ccp_lab::validate::{oos_violation, ScenarioGenerator};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use socp::{backend_by_name, SocpSolution, Status};

use schema::{read_json, write_json, JointMode, RunFile, SchemaError, SpecFile};

#[derive(Parser)]
#[command(
    name = "ccp",
    about = "Chance-constrained complex linear programs: reformulate, solve, validate, experiment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reformulate the problem under the configured model and solve it.
    Solve(RunArgs),
    /// Solve, then measure out-of-sample violation rates.
    Validate(RunArgs),
    /// Violation table across models and levels.
    ExperimentTable(RunArgs),
    /// Lower/upper joint bound gap versus tangent count.
    ExperimentGap(RunArgs),
    /// Objective convergence under empirical moment estimation.
    ExperimentEstimation(RunArgs),
    /// Robust MVDR beamforming SINR sweep.
    Beamform(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config's scenario/sweep seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Solver backend (reference | clarabel).
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Reform(#[from] ccp_core::ambiguity::ReformError),
    #[error(transparent)]
    Lab(#[from] ccp_lab::LabError),
    #[error(transparent)]
    Solver(#[from] socp::ProblemError),
    #[error(transparent)]
    Validation(#[from] ccp_lab::validate::ValidationError),
    #[error("config is for command '{expected}' but '{got}' was invoked")]
    CommandMismatch { expected: String, got: String },
    #[error("config is missing the '{0}' section")]
    MissingSection(&'static str),
    #[error("unknown backend '{0}'")]
    UnknownBackend(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args, false),
        Command::Validate(args) => run_solve(args, true),
        Command::ExperimentTable(args) => run_table(args),
        Command::ExperimentGap(args) => run_gap(args),
        Command::ExperimentEstimation(args) => run_estimation(args),
        Command::Beamform(args) => run_beamform(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

fn load_run(args: &RunArgs, expected: &str) -> Result<RunFile, CliError> {
    let mut run: RunFile = read_json(&args.config)?;
    if let Some(cmd) = &run.command {
        if cmd != expected {
            return Err(CliError::CommandMismatch {
                expected: cmd.clone(),
                got: expected.to_string(),
            });
        }
    }
    if let Some(seed) = args.seed {
        run.seed = Some(seed);
    }
    if let Some(tol) = args.tol {
        run.tol = Some(tol);
    }
    if args.backend.is_some() {
        run.backend = args.backend.clone();
    }
    std::fs::create_dir_all(&args.out).map_err(|source| SchemaError::Io {
        path: args.out.clone(),
        source,
    })?;
    Ok(run)
}

/// Loads and fully validates the problem file referenced by the config.
fn load_problem(run: &RunFile, config_path: &Path) -> Result<ChanceProblem, CliError> {
    let rel = run
        .problem
        .as_ref()
        .ok_or(CliError::MissingSection("problem"))?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let path = base.join(rel);
    let file: schema::ProblemFile = read_json(&path)?;
    Ok(file.to_problem()?)
}

#[derive(Serialize)]
struct SolutionOut {
    config_hash: String,
    status: &'static str,
    objective: f64,
    z: Vec<schema::ComplexF>,
    epigraph: Option<f64>,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    duality_gap: f64,
    conservative: bool,
    implied_weights: Option<Vec<f64>>,
    ub_certificate_valid: Option<bool>,
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
        Status::MaxIter => "max_iter",
    }
}

fn solve_with_backend(
    run: &RunFile,
    socp_problem: &socp::SocpProblem,
    tol: f64,
) -> Result<SocpSolution, CliError> {
    let name = run.backend.as_deref().unwrap_or("reference");
    let backend = backend_by_name(name).ok_or_else(|| CliError::UnknownBackend(name.into()))?;
    Ok(backend.solve(socp_problem, tol)?)
}

fn run_solve(args: &RunArgs, and_validate: bool) -> Result<(), CliError> {
    let run = load_run(args, if and_validate { "validate" } else { "solve" })?;
    let problem = load_problem(&run, &args.config)?;
    let spec_file = run.spec.clone().ok_or(CliError::MissingSection("spec"))?;
    let base = args.config.parent().unwrap_or_else(|| Path::new("."));
    let spec = spec_file.to_spec(base)?;
    let tol = run.tol.unwrap_or(1e-8);
    let hash = config_hash(&run);

    let (z, out) = match &run.joint {
        None => {
            let (socp_problem, layout) = reformulate_problem(&problem, &spec)?;
            let sol = solve_with_backend(&run, &socp_problem, tol)?;
            let z = layout.decode_z(&sol.x);
            let out = SolutionOut {
                config_hash: hash.clone(),
                status: status_str(sol.status),
                objective: sol.objective_value,
                z: z.iter().map(|&v| v.into()).collect(),
                epigraph: layout.epigraph.map(|i| sol.x[i]),
                iterations: sol.iterations,
                primal_residual: sol.primal_residual,
                dual_residual: sol.dual_residual,
                duality_gap: sol.duality_gap,
                conservative: layout.conservative,
                implied_weights: None,
                ub_certificate_valid: None,
            };
            (z, out)
        }
        Some(joint) => {
            let mode = match joint.mode {
                JointMode::Lower => BoundMode::Lower,
                JointMode::Upper => BoundMode::Upper,
            };
            let jcfg = JointApproxConfig::geometric(joint.theta, joint.tangent_points, mode);
            let (socp_problem, layout) = build_joint_socp(&problem, &spec, joint.p, &jcfg)?;
            let sol = solve_with_backend(&run, &socp_problem, tol.max(1e-5))?;
            let z = layout.decode_z(&sol.x);
            let weights = layout.implied_weights(&sol.x);
            let cert = if mode == BoundMode::Upper && sol.status == Status::Optimal {
                Some(ub_certificate(&problem, &spec, joint.p, &jcfg, &layout, &sol.x, 1e-5)?.valid)
            } else {
                None
            };
            let out = SolutionOut {
                config_hash: hash.clone(),
                status: status_str(sol.status),
                objective: sol.objective_value,
                z: z.iter().map(|&v| v.into()).collect(),
                epigraph: None,
                iterations: sol.iterations,
                primal_residual: sol.primal_residual,
                dual_residual: sol.dual_residual,
                duality_gap: sol.duality_gap,
                conservative: matches!(
                    spec,
                    ccp_core::ambiguity::AmbiguitySpec::NormSupport { .. }
                        | ccp_core::ambiguity::AmbiguitySpec::DataDriven { .. }
                ),
                implied_weights: Some(weights),
                ub_certificate_valid: cert,
            };
            (z, out)
        }
    };
    write_json(&args.out.join("solution.json"), &out)?;

    if and_validate {
        let v = run
            .validate
            .clone()
            .ok_or(CliError::MissingSection("validate"))?;
        let seed = run.seed.unwrap_or(0);
        let truncation = match &spec_file {
            SpecFile::NormSupport { bounds } => Some(nalgebra::DVector::from_vec(bounds.clone())),
            _ => None,
        };
        let generator = ScenarioGenerator {
            family: spec_file.validation_family(),
            rows: &problem.rows,
            truncation: truncation.as_ref(),
        };
        let report = oos_violation(&z, &generator, v.scenarios, seed)?;
        #[derive(Serialize)]
        struct ValidationOut {
            config_hash: String,
            seed: u64,
            scenarios: usize,
            joint_violation_rate: f64,
            mean_constraint_rate: f64,
            per_constraint_rates: Vec<f64>,
            binomial_halfwidth: f64,
        }
        write_json(
            &args.out.join("validation.json"),
            &ValidationOut {
                config_hash: hash,
                seed,
                scenarios: report.scenario_count,
                joint_violation_rate: report.joint_violation_rate,
                mean_constraint_rate: report.mean_constraint_rate(),
                per_constraint_rates: report.per_constraint_rates.clone(),
                binomial_halfwidth: report.binomial_halfwidth,
            },
        )?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| {
        CliError::Schema(SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn run_table(args: &RunArgs) -> Result<(), CliError> {
    let run = load_run(args, "experiment-table")?;
    let cfg = run.table.ok_or(CliError::MissingSection("table"))?;
    let out = ccp_lab::experiments::run_table_experiment(&cfg)?;
    write_text(&args.out.join("table.csv"), &out.csv)?;
    write_text(&args.out.join("table_summary.csv"), &out.summary_csv)?;
    Ok(())
}

fn run_gap(args: &RunArgs) -> Result<(), CliError> {
    let run = load_run(args, "experiment-gap")?;
    let cfg = run.gap.ok_or(CliError::MissingSection("gap"))?;
    let out = ccp_lab::experiments::run_gap_experiment(&cfg)?;
    write_text(&args.out.join("gap.csv"), &out.csv)?;
    Ok(())
}

fn run_estimation(args: &RunArgs) -> Result<(), CliError> {
    let run = load_run(args, "experiment-estimation")?;
    let cfg = run
        .estimation
        .ok_or(CliError::MissingSection("estimation"))?;
    let out = ccp_lab::experiments::run_estimation_experiment(&cfg)?;
    write_text(&args.out.join("estimation.csv"), &out.csv)?;
    Ok(())
}

fn run_beamform(args: &RunArgs) -> Result<(), CliError> {
    let mut run = load_run(args, "beamform")?;
    let mut cfg = run
        .beamform
        .take()
        .ok_or(CliError::MissingSection("beamform"))?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = run.tol {
        cfg.tol = tol;
    }
    let out = ccp_lab::beamforming::snr_sweep(&cfg)?;
    write_text(&args.out.join("sweep.csv"), &out.csv)?;
    Ok(())
}
