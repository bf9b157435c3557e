//! The three experiment pipelines: the violation table (individual vs joint
//! solves validated out of sample), the lower/upper bound gap sweep over
//! tangent counts, and the estimation-uncertainty convergence study.

use ccp_core::ambiguity::{reformulate_problem, reformulate_problem_per_row, AmbiguitySpec};
use ccp_core::joint::{
    build_joint_socp_per_row, ub_certificate, BoundMode, JointApproxConfig,
};
use serde::{Deserialize, Serialize};
use socp::{solve, Status};

use crate::csv::{fmt, CsvBuilder};
use crate::instances::{random_instance_scaled, separable_instance, SpecTag};
use crate::validate::{oos_violation, ScenarioGenerator};
use crate::LabError;

fn status_label(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
        Status::MaxIter => "max_iter",
    }
}

// ---------------------------------------------------------------- table --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableConfig {
    pub n: usize,
    pub m: usize,
    /// Right-hand-side mean range; large enough that the data-driven
    /// inflation leaves the rows feasible at the configured training size.
    pub b_range: (f64, f64),
    pub levels: Vec<f64>,
    pub theta: f64,
    pub specs: Vec<SpecTag>,
    pub instance_seed: u64,
    pub scenario_seed: u64,
    pub train_seed: u64,
    pub scenarios: usize,
    pub tangent_points: usize,
    pub include_joint: bool,
    pub tol: f64,
}

impl TableConfig {
    /// Desk-scale defaults mirroring the standard protocol; the caller
    /// picks dimensions.
    pub fn desk(n: usize, m: usize) -> Self {
        TableConfig {
            n,
            m,
            b_range: (25.0, 35.0),
            levels: vec![0.7, 0.8, 0.95],
            theta: 2.0,
            specs: vec![
                SpecTag::Gaussian,
                SpecTag::StudentT { nu: 4.0 },
                SpecTag::Laplace,
                SpecTag::Logistic,
                SpecTag::Cauchy,
                SpecTag::MomentSymmetric,
                SpecTag::MomentExact,
                SpecTag::NormSupport { bound: 10.0 },
                SpecTag::DataDriven {
                    samples: 40_000,
                    delta: 0.05,
                },
            ],
            instance_seed: 20_240_001,
            scenario_seed: 77,
            train_seed: 31,
            scenarios: 1000,
            tangent_points: 20,
            include_joint: true,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub spec: String,
    pub p: f64,
    pub mode: &'static str,
    pub objective: f64,
    /// Mean per-constraint rate for individual mode, joint-event rate for
    /// joint mode.
    pub violation: f64,
    pub joint_violation: f64,
    pub mean_violation: f64,
    pub halfwidth: f64,
    pub status: Status,
    pub flagged_heavy_tail: bool,
    pub conservative: bool,
}

#[derive(Debug, Clone)]
pub struct TableOutcome {
    pub rows: Vec<TableRow>,
    pub csv: String,
    pub summary_csv: String,
}

pub fn run_table_experiment(cfg: &TableConfig) -> Result<TableOutcome, LabError> {
    let mut problem = random_instance_scaled(cfg.instance_seed, cfg.n, cfg.m, cfg.b_range);
    let mut rows = Vec::new();
    for tag in &cfg.specs {
        let row_specs = tag.row_specs(&problem, cfg.train_seed)?;
        for &p in &cfg.levels {
            problem.levels = vec![p; cfg.m];
            rows.push(solve_and_validate(
                &problem, tag, &row_specs, p, "individual", cfg,
            )?);
            if cfg.include_joint {
                rows.push(solve_and_validate(&problem, tag, &row_specs, p, "joint", cfg)?);
            }
        }
    }

    let mut csv = CsvBuilder::new(
        cfg,
        &[
            ("instance", cfg.instance_seed),
            ("scenario", cfg.scenario_seed),
            ("train", cfg.train_seed),
        ],
        &[
            "spec",
            "p",
            "mode",
            "theta",
            "objective",
            "violation",
            "joint_violation",
            "mean_violation",
            "halfwidth",
            "status",
            "flagged_heavy_tail",
            "conservative",
        ],
    );
    for r in &rows {
        csv.row(&[
            r.spec.clone(),
            fmt(r.p),
            r.mode.to_string(),
            fmt(cfg.theta),
            fmt(r.objective),
            fmt(r.violation),
            fmt(r.joint_violation),
            fmt(r.mean_violation),
            fmt(r.halfwidth),
            status_label(r.status).to_string(),
            r.flagged_heavy_tail.to_string(),
            r.conservative.to_string(),
        ]);
    }

    // monotonicity summary per (spec, mode): objective should rise with p,
    // violation fall
    let mut summary = CsvBuilder::new(
        cfg,
        &[("instance", cfg.instance_seed)],
        &["spec", "mode", "objective_monotone_in_p", "violation_monotone_in_p"],
    );
    for tag in &cfg.specs {
        for mode in ["individual", "joint"] {
            let series: Vec<&TableRow> = rows
                .iter()
                .filter(|r| r.spec == tag.label() && r.mode == mode && r.status == Status::Optimal)
                .collect();
            if series.is_empty() {
                continue;
            }
            let obj_mono = series.windows(2).all(|w| w[1].objective >= w[0].objective - 1e-9);
            let viol_mono = series
                .windows(2)
                .all(|w| w[1].violation <= w[0].violation + 1e-9);
            summary.row(&[
                tag.label(),
                mode.to_string(),
                obj_mono.to_string(),
                viol_mono.to_string(),
            ]);
        }
    }

    Ok(TableOutcome {
        rows,
        csv: csv.finish(),
        summary_csv: summary.finish(),
    })
}

fn solve_and_validate(
    problem: &ccp_core::ambiguity::ChanceProblem,
    tag: &SpecTag,
    row_specs: &[AmbiguitySpec],
    p: f64,
    mode: &'static str,
    cfg: &TableConfig,
) -> Result<TableRow, LabError> {
    let (z, objective, status) = if mode == "individual" {
        let (socp, layout) = reformulate_problem_per_row(problem, row_specs)?;
        let sol = solve(&socp, cfg.tol)?;
        (layout.decode_z(&sol.x), sol.objective_value, sol.status)
    } else {
        let jcfg = JointApproxConfig::geometric(cfg.theta, cfg.tangent_points, BoundMode::Lower);
        let (socp, layout) = build_joint_socp_per_row(problem, row_specs, p, &jcfg)?;
        // joint builds are piece-heavy and degenerate; run them at a looser
        // feasibility target than the individual solves
        let sol = solve(&socp, cfg.tol.max(1e-5))?;
        (layout.decode_z(&sol.x), sol.objective_value, sol.status)
    };
    let mut row = TableRow {
        spec: tag.label(),
        p,
        mode,
        objective,
        violation: f64::NAN,
        joint_violation: f64::NAN,
        mean_violation: f64::NAN,
        halfwidth: f64::NAN,
        status,
        flagged_heavy_tail: tag.heavy_tailed(),
        conservative: tag.conservative(),
    };
    if status == Status::Optimal {
        let truncation = tag.truncation(problem.n);
        let generator = ScenarioGenerator {
            family: tag.validation_family(),
            rows: &problem.rows,
            truncation: truncation.as_ref(),
        };
        let report = oos_violation(&z, &generator, cfg.scenarios, cfg.scenario_seed)?;
        row.joint_violation = report.joint_violation_rate;
        row.mean_violation = report.mean_constraint_rate();
        row.violation = if mode == "individual" {
            report.mean_constraint_rate()
        } else {
            report.joint_violation_rate
        };
        row.halfwidth = crate::validate::ValidationReport::halfwidth_at(
            row.violation.max(1e-12),
            cfg.scenarios,
        );
    }
    Ok(row)
}

// ------------------------------------------------------------------ gap --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapConfig {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub theta: f64,
    pub tangent_counts: Vec<usize>,
    pub instance_seed: u64,
    pub tol: f64,
}

impl GapConfig {
    pub fn desk() -> Self {
        GapConfig {
            n: 10,
            m: 5,
            p: 0.95,
            theta: 2.0,
            tangent_counts: vec![5, 10, 20, 40],
            instance_seed: 40_402,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapRow {
    pub tangent_points: usize,
    pub lower: f64,
    pub upper: f64,
    pub relative_gap: f64,
    pub lower_status: Status,
    pub upper_status: Status,
    pub ub_certificate_valid: bool,
}

#[derive(Debug, Clone)]
pub struct GapOutcome {
    pub rows: Vec<GapRow>,
    pub csv: String,
}

pub fn run_gap_experiment(cfg: &GapConfig) -> Result<GapOutcome, LabError> {
    let mut problem = separable_instance(cfg.instance_seed, cfg.n, cfg.m);
    problem.levels = vec![cfg.p; cfg.m];
    let spec = AmbiguitySpec::MomentExact;
    let specs = vec![spec.clone(); cfg.m];

    let mut rows = Vec::new();
    for &count in &cfg.tangent_counts {
        let lo_cfg = JointApproxConfig::geometric(cfg.theta, count, BoundMode::Lower);
        let (lo_socp, _) = build_joint_socp_per_row(&problem, &specs, cfg.p, &lo_cfg)?;
        let lo = solve(&lo_socp, cfg.tol)?;

        let hi_cfg = JointApproxConfig::geometric(cfg.theta, count, BoundMode::Upper);
        let (hi_socp, hi_layout) = build_joint_socp_per_row(&problem, &specs, cfg.p, &hi_cfg)?;
        let hi = solve(&hi_socp, cfg.tol)?;

        let cert = ub_certificate(
            &problem, &spec, cfg.p, &hi_cfg, &hi_layout, &hi.x, 1e-5,
        )?;
        let gap = (hi.objective_value - lo.objective_value) / hi.objective_value.abs().max(1e-12);
        rows.push(GapRow {
            tangent_points: count,
            lower: lo.objective_value,
            upper: hi.objective_value,
            relative_gap: gap,
            lower_status: lo.status,
            upper_status: hi.status,
            ub_certificate_valid: cert.valid,
        });
    }

    let mut csv = CsvBuilder::new(
        cfg,
        &[("instance", cfg.instance_seed)],
        &[
            "tangent_points",
            "lower",
            "upper",
            "relative_gap",
            "lower_status",
            "upper_status",
            "ub_certificate_valid",
        ],
    );
    for r in &rows {
        csv.row(&[
            r.tangent_points.to_string(),
            fmt(r.lower),
            fmt(r.upper),
            fmt(r.relative_gap),
            status_label(r.lower_status).to_string(),
            status_label(r.upper_status).to_string(),
            r.ub_certificate_valid.to_string(),
        ]);
    }
    Ok(GapOutcome {
        rows,
        csv: csv.finish(),
    })
}

// ----------------------------------------------------------- estimation --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub n: usize,
    pub m: usize,
    pub b_range: (f64, f64),
    pub p: f64,
    pub sample_sizes: Vec<usize>,
    pub delta: f64,
    pub instance_seed: u64,
    pub train_seed: u64,
    pub tol: f64,
}

impl EstimationConfig {
    pub fn desk() -> Self {
        EstimationConfig {
            n: 6,
            m: 4,
            b_range: (8.0, 12.0),
            p: 0.75,
            sample_sizes: vec![100, 1000, 10_000, 100_000],
            delta: 0.05,
            instance_seed: 555,
            train_seed: 556,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationRow {
    pub samples: usize,
    /// Plug-in re-solve with the empirical moments (no radii); converges
    /// to the true objective as the sample count grows.
    pub objective_plugin: f64,
    pub plugin_status: Status,
    /// Radii-robustified solve; an upper envelope of the true objective
    /// whenever the concentration bounds hold.
    pub objective_robust: f64,
    pub robust_status: Status,
    pub objective_true: f64,
    pub below_min_n: bool,
}

#[derive(Debug, Clone)]
pub struct EstimationOutcome {
    pub rows: Vec<EstimationRow>,
    pub objective_true: f64,
    pub csv: String,
}

pub fn run_estimation_experiment(cfg: &EstimationConfig) -> Result<EstimationOutcome, LabError> {
    let mut problem = random_instance_scaled(cfg.instance_seed, cfg.n, cfg.m, cfg.b_range);
    problem.levels = vec![cfg.p; cfg.m];

    let (socp, _) = reformulate_problem(&problem, &AmbiguitySpec::MomentExact)?;
    let true_sol = solve(&socp, cfg.tol)?;
    if true_sol.status != Status::Optimal {
        return Err(LabError::SolveFailed {
            what: "true-moments solve",
            status: status_label(true_sol.status),
        });
    }
    let objective_true = true_sol.objective_value;

    let mut rows = Vec::new();
    for &count in &cfg.sample_sizes {
        let tag = SpecTag::DataDriven {
            samples: count,
            delta: cfg.delta,
        };
        let row_specs = tag.row_specs(&problem, cfg.train_seed)?;
        let min_n = {
            let c = 2.0 + (2.0 * (6.0 / cfg.delta).ln()).sqrt();
            (c * c).ceil() as usize
        };
        let below_min_n = count < min_n;
        let plugin_specs: Vec<AmbiguitySpec> = row_specs
            .iter()
            .map(|s| match s {
                AmbiguitySpec::DataDriven { est, .. } => AmbiguitySpec::DataDriven {
                    est: est.clone(),
                    r1: 0.0,
                    r2: 0.0,
                },
                other => other.clone(),
            })
            .collect();
        let (plug_socp, _) = reformulate_problem_per_row(&problem, &plugin_specs)?;
        let plug = solve(&plug_socp, cfg.tol)?;
        let (socp, _) = reformulate_problem_per_row(&problem, &row_specs)?;
        let sol = solve(&socp, cfg.tol)?;
        rows.push(EstimationRow {
            samples: count,
            objective_plugin: plug.objective_value,
            plugin_status: plug.status,
            objective_robust: sol.objective_value,
            robust_status: sol.status,
            objective_true,
            below_min_n,
        });
    }

    let mut csv = CsvBuilder::new(
        cfg,
        &[("instance", cfg.instance_seed), ("train", cfg.train_seed)],
        &[
            "samples",
            "objective_plugin",
            "plugin_status",
            "objective_robust",
            "robust_status",
            "objective_true",
            "below_min_n",
        ],
    );
    for r in &rows {
        csv.row(&[
            r.samples.to_string(),
            fmt(r.objective_plugin),
            status_label(r.plugin_status).to_string(),
            fmt(r.objective_robust),
            status_label(r.robust_status).to_string(),
            fmt(r.objective_true),
            r.below_min_n.to_string(),
        ]);
    }
    Ok(EstimationOutcome {
        rows,
        objective_true,
        csv: csv.finish(),
    })
}
