//! Seeded random instances for the experiment pipelines.

use ccp_core::ambiguity::{AmbiguitySpec, ChanceProblem, Objective};
use ccp_core::dist::{sample_complex, CesFamily, SeededStream};
use ccp_core::estimation::{concentration_radii, empirical_moments, support_radius, SampleSet};
use ccp_core::moments::{CMatrix, CVector, ConstraintRow, MomentTriple};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, th)
}

/// General instance: covariances from random complex factors `G G^H`
/// scaled to unit average diagonal, pseudo-covariances `G G^T` at half that
/// scale (which keeps the stacked covariance safely semidefinite), noisy
/// right-hand sides in `b_range`, and a deterministic objective with
/// unit-disk entries. Row means take positive real and negative imaginary
/// parts so that, with the sign constraints on, every direction of growth
/// is blocked and the problem is bounded for any safety factor.
pub fn random_instance_scaled(
    seed: u64,
    n: usize,
    m: usize,
    b_range: (f64, f64),
) -> ChanceProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..m)
        .map(|_| {
            let mean = CVector::from_fn(n, |_, _| {
                Complex64::new(rng.gen_range(0.2..1.0), -rng.gen_range(0.05..0.5))
            });
            let g = CMatrix::from_fn(n, n, |_, _| unit_disk(&mut rng));
            let cov_raw = &g * g.adjoint();
            let avg_diag = (0..n).map(|i| cov_raw[(i, i)].re).sum::<f64>() / n as f64;
            let cov = cov_raw / Complex64::new(avg_diag, 0.0);
            let pcov = &g * g.transpose() * Complex64::new(0.5 / avg_diag, 0.0);
            let b_mean = rng.gen_range(b_range.0..b_range.1);
            let b_var = rng.gen_range(0.0..0.04);
            ConstraintRow::new(MomentTriple::new(mean, cov, pcov).unwrap(), b_mean, b_var)
                .unwrap()
        })
        .collect();
    let c = CVector::from_fn(n, |_, _| unit_disk(&mut rng));
    ChanceProblem {
        n,
        objective: Objective::Deterministic(c),
        rows,
        levels: vec![],
        sign_constraints: true,
    }
}

pub fn random_instance(seed: u64, n: usize, m: usize) -> ChanceProblem {
    random_instance_scaled(seed, n, m, (0.5, 1.5))
}

/// Separable instance: proper rows with diagonal covariance and
/// deterministic right-hand sides. The joint surrogate substitution is
/// exact for these, so lower/upper bounds can be compared against each
/// other and against brute-force weight scans without monotonicity
/// caveats.
pub fn separable_instance(seed: u64, n: usize, m: usize) -> ChanceProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..m)
        .map(|_| {
            let mean = CVector::from_fn(n, |_, _| {
                Complex64::new(rng.gen_range(0.2..1.0), rng.gen_range(-0.3..0.3))
            });
            let cov = CMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    Complex64::new(rng.gen_range(0.3..1.5), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            ConstraintRow::new(
                MomentTriple::proper(mean, cov).unwrap(),
                rng.gen_range(0.5..1.5),
                0.0,
            )
            .unwrap()
        })
        .collect();
    let c = CVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..-0.2), rng.gen_range(-0.4..0.4))
    });
    ChanceProblem {
        n,
        objective: Objective::Deterministic(c),
        rows,
        levels: vec![],
        sign_constraints: true,
    }
}

/// Uncertainty models selectable in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpecTag {
    Gaussian,
    StudentT { nu: f64 },
    Laplace,
    Logistic,
    Cauchy,
    MomentExact,
    MomentSymmetric,
    NormSupport { bound: f64 },
    DataDriven { samples: usize, delta: f64 },
}

impl SpecTag {
    pub fn label(&self) -> String {
        match self {
            SpecTag::Gaussian => "gaussian".into(),
            SpecTag::StudentT { nu } => format!("student_t({nu})"),
            SpecTag::Laplace => "laplace".into(),
            SpecTag::Logistic => "logistic".into(),
            SpecTag::Cauchy => "cauchy".into(),
            SpecTag::MomentExact => "moment_exact".into(),
            SpecTag::MomentSymmetric => "moment_symmetric".into(),
            SpecTag::NormSupport { .. } => "norm_support".into(),
            SpecTag::DataDriven { .. } => "data_driven".into(),
        }
    }

    /// The family scenarios are drawn from when validating this model; the
    /// distributionally robust models are exercised against Gaussian data.
    pub fn validation_family(&self) -> CesFamily {
        match self {
            SpecTag::Gaussian => CesFamily::Gaussian,
            SpecTag::StudentT { nu } => CesFamily::StudentT { nu: *nu },
            SpecTag::Laplace => CesFamily::Laplace,
            SpecTag::Logistic => CesFamily::Logistic,
            SpecTag::Cauchy => CesFamily::Cauchy,
            _ => CesFamily::Gaussian,
        }
    }

    /// Heavy-tailed rows are reported but exempt from the violation
    /// guarantee: a variance-based reformulation is heuristic there.
    pub fn heavy_tailed(&self) -> bool {
        matches!(self, SpecTag::Cauchy) || matches!(self, SpecTag::StudentT { nu } if *nu <= 2.0)
    }

    /// Whether the model's guarantee is a sufficient condition only
    /// (reports label these conservative).
    pub fn conservative(&self) -> bool {
        matches!(
            self,
            SpecTag::NormSupport { .. } | SpecTag::DataDriven { .. }
        )
    }

    pub fn is_dro(&self) -> bool {
        matches!(
            self,
            SpecTag::MomentExact
                | SpecTag::MomentSymmetric
                | SpecTag::NormSupport { .. }
                | SpecTag::DataDriven { .. }
        )
    }

    /// Support bounds injected into the validation generator, if any.
    pub fn truncation(&self, n: usize) -> Option<DVector<f64>> {
        match self {
            SpecTag::NormSupport { bound } => Some(DVector::from_element(n + 1, *bound)),
            _ => None,
        }
    }

    /// Per-row ambiguity specs for the instance. The data-driven model
    /// estimates each row's stacked moments from training samples drawn
    /// from the validation family.
    pub fn row_specs(
        &self,
        problem: &ChanceProblem,
        train_seed: u64,
    ) -> Result<Vec<AmbiguitySpec>, crate::LabError> {
        let n = problem.n;
        let m = problem.rows.len();
        Ok(match self {
            SpecTag::Gaussian => vec![AmbiguitySpec::CesKnown(CesFamily::Gaussian); m],
            SpecTag::StudentT { nu } => {
                vec![AmbiguitySpec::CesKnown(CesFamily::StudentT { nu: *nu }); m]
            }
            SpecTag::Laplace => vec![AmbiguitySpec::CesKnown(CesFamily::Laplace); m],
            SpecTag::Logistic => vec![AmbiguitySpec::CesKnown(CesFamily::Logistic); m],
            SpecTag::Cauchy => vec![AmbiguitySpec::CesKnown(CesFamily::Cauchy); m],
            SpecTag::MomentExact => vec![AmbiguitySpec::MomentExact; m],
            SpecTag::MomentSymmetric => vec![AmbiguitySpec::MomentSymmetric; m],
            SpecTag::NormSupport { bound } => {
                vec![
                    AmbiguitySpec::NormSupport {
                        bounds: DVector::from_element(n + 1, *bound),
                    };
                    m
                ]
            }
            SpecTag::DataDriven { samples, delta } => {
                let family = self.validation_family();
                let mut specs = Vec::with_capacity(m);
                for (i, row) in problem.rows.iter().enumerate() {
                    let d_samples =
                        draw_training_rows(row, family, *samples, train_seed, i as u64)?;
                    let set = SampleSet::new(d_samples)?;
                    let est = empirical_moments(&set);
                    let radius = support_radius(&set);
                    let radii = concentration_radii(radius.max(1e-12), set.len(), *delta)?;
                    specs.push(AmbiguitySpec::DataDriven {
                        est,
                        r1: radii.r1,
                        r2: radii.r2,
                    });
                }
                specs
            }
        })
    }
}

/// Stacked training samples `d = [a, b]` for one row.
fn draw_training_rows(
    row: &ConstraintRow,
    family: CesFamily,
    count: usize,
    seed: u64,
    row_index: u64,
) -> Result<Vec<CVector>, crate::LabError> {
    let n = row.dim();
    let a_stream = SeededStream::new(seed, 10_000 + 2 * row_index);
    let b_stream = SeededStream::new(seed, 10_000 + 2 * row_index + 1);
    let a_draws = sample_complex(family, &row.a, count, a_stream)?;
    let mut b_rng = b_stream.rng();
    let b_sigma = row.b_var.sqrt();
    Ok(a_draws
        .into_iter()
        .map(|a| {
            let b = row.b_mean + b_sigma * ccp_core::dist::draw_standardized(family, &mut b_rng);
            let mut d = CVector::zeros(n + 1);
            d.rows_mut(0, n).copy_from(&a);
            d[n] = Complex64::new(b, 0.0);
            d
        })
        .collect())
}
