//! SOCP bounds for the joint chance constraint.
//!
//! The joint problem couples the rows through simplex weights `y` feeding
//! `k_p(y_i)`; the builder replaces the products `k_p(y_i) z` by surrogate
//! vectors `r_i` tied to `z` through piecewise-linear inequalities
//! `Re(r_ij) >= alpha_l Re(z_j) + beta_l Re(w_ij)` (and imaginary
//! counterparts) with splitting variables `sum_i w_ij = z_j`. Tangent
//! pieces give an outer approximation whose optimum lower-bounds the joint
//! problem; chord pieces give the upper-bound counterpart. Componentwise
//! sign constraints on `z` are required for the substitution to be
//! directionally sound, and the constant coordinate of the stacked
//! quadratic (the `b`-variance slot) stays unscaled, following the printed
//! form of the approximation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use socp::{ConeBlock, SocpProblem};

use crate::ambiguity::{
    dspace_cone_at, dspace_map, hermitian_embedding, inflate_moments, AmbiguitySpec,
    ChanceProblem, Objective, ReformError,
};
use crate::copula::{
    interpolation_overestimator, safety_curve, tangent_underestimator, CopulaError, KpCase,
    PieceCoeffs,
};
use crate::moments::{flip_imaginary, psd_sqrt, stack_re_im, CVector, MomentTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    Lower,
    Upper,
}

/// Piecewise approximation config: copula parameter, breakpoints in (0, 1],
/// and which bound to build.
#[derive(Debug, Clone)]
pub struct JointApproxConfig {
    pub theta: f64,
    pub points: Vec<f64>,
    pub mode: BoundMode,
}

impl JointApproxConfig {
    pub fn geometric(theta: f64, count: usize, mode: BoundMode) -> Self {
        JointApproxConfig {
            theta,
            points: crate::copula::geometric_points(count),
            mode,
        }
    }
}

/// Variable layout of a joint build: `z` (2n), then per row `r_i` (2n) and
/// `w_i` (2n), then per-row auxiliaries.
#[derive(Debug, Clone)]
pub struct JointLayout {
    pub n: usize,
    pub m: usize,
    pub nvars: usize,
}

impl JointLayout {
    pub fn z_offset(&self) -> usize {
        0
    }

    pub fn r_offset(&self, i: usize) -> usize {
        2 * self.n + i * 4 * self.n
    }

    pub fn w_offset(&self, i: usize) -> usize {
        2 * self.n + i * 4 * self.n + 2 * self.n
    }

    pub fn decode_z(&self, x: &DVector<f64>) -> CVector {
        CVector::from_fn(self.n, |j, _| Complex64::new(x[j], x[self.n + j]))
    }

    /// Weights implied by the splitting variables:
    /// `y_i = Re <z, w_i> / ||z||^2`, the least-squares fit of
    /// `w_i = y_i z`.
    pub fn implied_weights(&self, x: &DVector<f64>) -> Vec<f64> {
        let z = self.decode_z(x);
        let zn = z.norm_squared().max(1e-300);
        (0..self.m)
            .map(|i| {
                let off = self.w_offset(i);
                let mut dot = 0.0;
                for j in 0..self.n {
                    dot += z[j].re * x[off + j] + z[j].im * x[off + self.n + j];
                }
                dot / zn
            })
            .collect()
    }
}

/// Per-row quadratic and mean data shared by the builder and the
/// certificate check.
struct JointRow {
    /// Constraint-form d-space quadratic of the row's uncertainty.
    quad: DMatrix<f64>,
    /// d-space mean (dim n+1, last entry the b-side mean).
    mean: CVector,
    /// Extra deterministic mean-side terms (weight-free).
    extra: Extra,
}

enum Extra {
    None,
    /// `r1 ||ztilde||` mean penalty of the data-driven model.
    NormPenalty(f64),
    /// `sqrt(zeta) ||G^{1/2} ztilde||` support term of the mean ellipsoid.
    Ellipsoid { scale: f64, embed: DMatrix<f64> },
}

fn joint_row(
    spec: &AmbiguitySpec,
    row: &crate::moments::ConstraintRow,
    n: usize,
) -> Result<JointRow, ReformError> {
    match spec {
        AmbiguitySpec::CesKnown(_)
        | AmbiguitySpec::MomentExact
        | AmbiguitySpec::MomentSymmetric => {
            let d = row.stacked_moments();
            Ok(JointRow {
                quad: d.constraint_matrix(),
                mean: d.mean,
                extra: Extra::None,
            })
        }
        AmbiguitySpec::CovBounded { bound } => {
            let dim = 2 * (n + 1);
            if bound.nrows() != dim || bound.ncols() != dim {
                return Err(ReformError::BadParameter(format!(
                    "covariance bound is {}x{}, expected {dim}x{dim}",
                    bound.nrows(),
                    bound.ncols()
                )));
            }
            Ok(JointRow {
                quad: flip_imaginary(bound),
                mean: row.stacked_moments().mean,
                extra: Extra::None,
            })
        }
        AmbiguitySpec::MomentsEllipsoid {
            zeta,
            mean,
            cov,
            pcov,
        } => {
            let est = MomentTriple {
                mean: mean.clone(),
                cov: cov.clone(),
                pcov: pcov.clone(),
            };
            let extra = if *zeta > 0.0 {
                Extra::Ellipsoid {
                    scale: zeta.sqrt(),
                    embed: hermitian_embedding(cov)?,
                }
            } else {
                Extra::None
            };
            Ok(JointRow {
                quad: est.constraint_matrix(),
                mean: est.mean,
                extra,
            })
        }
        AmbiguitySpec::NormSupport { bounds } => {
            if bounds.len() != n + 1 {
                return Err(ReformError::BadParameter(format!(
                    "norm bounds have length {}, expected {}",
                    bounds.len(),
                    n + 1
                )));
            }
            let dim = 2 * (n + 1);
            let mut quad = DMatrix::zeros(dim, dim);
            for j in 0..=n {
                quad[(j, j)] = bounds[j] * bounds[j];
                quad[(n + 1 + j, n + 1 + j)] = bounds[j] * bounds[j];
            }
            Ok(JointRow {
                quad,
                mean: row.stacked_moments().mean,
                extra: Extra::None,
            })
        }
        AmbiguitySpec::DataDriven { est, r1, r2 } => {
            if est.dim() != n + 1 {
                return Err(ReformError::BadParameter(format!(
                    "estimated moments have dimension {}, expected {}",
                    est.dim(),
                    n + 1
                )));
            }
            let inflated = inflate_moments(est, *r2);
            let extra = if *r1 > 0.0 {
                Extra::NormPenalty(*r1)
            } else {
                Extra::None
            };
            Ok(JointRow {
                quad: inflated.constraint_matrix(),
                mean: inflated.mean,
                extra,
            })
        }
    }
}

fn pieces_for(
    spec: &AmbiguitySpec,
    p: f64,
    cfg: &JointApproxConfig,
) -> Result<PieceCoeffs, CopulaError> {
    let case = KpCase::from_spec(spec);
    match cfg.mode {
        BoundMode::Lower => tangent_underestimator(case, p, cfg.theta, &cfg.points),
        BoundMode::Upper => interpolation_overestimator(case, p, cfg.theta, &cfg.points),
    }
}

/// Builds the lower- or upper-bound SOCP of the joint problem at level `p`.
pub fn build_joint_socp(
    problem: &ChanceProblem,
    spec: &AmbiguitySpec,
    p: f64,
    cfg: &JointApproxConfig,
) -> Result<(SocpProblem, JointLayout), ReformError> {
    let specs = vec![spec.clone(); problem.rows.len()];
    build_joint_socp_per_row(problem, &specs, p, cfg)
}

/// Per-row variant: all models must share one safety-curve row (the
/// data-driven table path has distinct estimated moments per row but one
/// curve).
pub fn build_joint_socp_per_row(
    problem: &ChanceProblem,
    specs: &[AmbiguitySpec],
    p: f64,
    cfg: &JointApproxConfig,
) -> Result<(SocpProblem, JointLayout), ReformError> {
    problem.validate_structure()?;
    if specs.len() != problem.rows.len() || specs.is_empty() {
        return Err(ReformError::BadParameter(format!(
            "need one model per row: {} models for {} rows",
            specs.len(),
            problem.rows.len()
        )));
    }
    if !problem.sign_constraints {
        return Err(ReformError::BadParameter(
            "the joint formulation requires componentwise sign constraints on z".into(),
        ));
    }
    let c = match &problem.objective {
        Objective::Deterministic(c) => c.clone(),
        Objective::Random { .. } => {
            return Err(ReformError::BadParameter(
                "the joint builder supports deterministic objectives only".into(),
            ))
        }
    };
    let case = KpCase::from_spec(&specs[0]);
    if specs.iter().any(|s| KpCase::from_spec(s) != case) {
        return Err(ReformError::BadParameter(
            "all rows must share one safety-curve case in a joint build".into(),
        ));
    }
    case.check_level(p)
        .map_err(|e| ReformError::BadParameter(e.to_string()))?;
    let pieces =
        pieces_for(&specs[0], p, cfg).map_err(|e| ReformError::BadParameter(e.to_string()))?;

    let n = problem.n;
    let m = problem.rows.len();
    let base = 2 * n * (1 + 2 * m);
    let rows: Vec<JointRow> = problem
        .rows
        .iter()
        .zip(specs.iter())
        .map(|(row, spec)| joint_row(spec, row, n))
        .collect::<Result<_, _>>()?;
    let aux_per_row: Vec<usize> = rows
        .iter()
        .map(|r| match r.extra {
            Extra::None => 0,
            _ => 2,
        })
        .collect();
    let nvars = base + aux_per_row.iter().sum::<usize>();
    let layout = JointLayout { n, m, nvars };

    let mut socp = SocpProblem::new(DVector::zeros(nvars));
    for j in 0..n {
        socp.objective[j] = c[j].re;
        socp.objective[n + j] = c[j].im;
    }

    // per-row cone: quadratic over r_i, mean (and extras) over z
    let mut aux_at = base;
    for (i, jr) in rows.iter().enumerate() {
        let cone = dspace_cone_at(&jr.quad, &jr.mean, 1.0, n, nvars, layout.r_offset(i));
        match &jr.extra {
            Extra::None => socp.cone_blocks.push(cone),
            extra => {
                let (u_idx, v_idx) = (aux_at, aux_at + 1);
                aux_at += 2;
                // mean + extra + sigma <= 0 via u >= extra, v >= sigma
                let mut var_cone = cone;
                let mut lin_c = var_cone.c.clone();
                let lin_d = var_cone.d;
                var_cone.c = DVector::zeros(nvars);
                var_cone.c[v_idx] = 1.0;
                var_cone.d = 0.0;
                lin_c[u_idx] = -1.0;
                lin_c[v_idx] = -1.0;
                let (pm, e) = dspace_map(n);
                let (f, scale) = match extra {
                    Extra::NormPenalty(r1) => (DMatrix::identity(2 * (n + 1), 2 * (n + 1)), *r1),
                    Extra::Ellipsoid { scale, embed } => (psd_sqrt(embed), *scale),
                    Extra::None => unreachable!(),
                };
                let a_z = scale * &f * pm;
                let b = scale * f * e;
                let mut a = DMatrix::zeros(a_z.nrows(), nvars);
                a.view_mut((0, 0), (a_z.nrows(), 2 * n)).copy_from(&a_z);
                let mut cvec = DVector::zeros(nvars);
                cvec[u_idx] = 1.0;
                socp.cone_blocks.push(ConeBlock {
                    a,
                    b,
                    c: cvec,
                    d: 0.0,
                });
                socp.cone_blocks.push(var_cone);
                socp.cone_blocks.push(ConeBlock::linear(lin_c, lin_d));
            }
        }
    }

    // piecewise inequalities Re/Im(r_ij) >= alpha z_j + beta w_ij,
    // normalized by the largest coefficient: tangents near y = 0 are steep
    // and unscaled rows hurt the solver's conditioning
    for i in 0..m {
        let (ro, wo) = (layout.r_offset(i), layout.w_offset(i));
        for j in 0..n {
            for &(alpha, beta) in &pieces.pieces {
                let scale = 1.0 / alpha.abs().max(beta.abs()).max(1.0);
                for part in 0..2 {
                    let (rj, zj, wj) = (
                        ro + part * n + j,
                        part * n + j,
                        wo + part * n + j,
                    );
                    let mut cvec = DVector::zeros(nvars);
                    cvec[rj] = scale;
                    cvec[zj] = -alpha * scale;
                    cvec[wj] = -beta * scale;
                    socp.cone_blocks.push(ConeBlock::linear(cvec, 0.0));
                }
            }
        }
    }

    // splitting: sum_i w_ij = z_j (real and imaginary parts)
    let mut e_mat = DMatrix::zeros(2 * n, nvars);
    for j in 0..2 * n {
        e_mat[(j, j)] = -1.0;
        for i in 0..m {
            e_mat[(j, layout.w_offset(i) + j)] = 1.0;
        }
    }
    socp.equalities = Some((e_mat, DVector::zeros(2 * n)));
    socp.nonneg = (0..2 * n).collect();

    Ok((socp, layout))
}

/// A-posteriori validity check of an upper-bound solution: with the weights
/// implied by the splitting variables, every row must satisfy its exact
/// weighted inequality `mean + extras + k_p(y_i) sigma <= tol`, the weights
/// must lie inside the chord span, and sum to one.
#[derive(Debug, Clone)]
pub struct UbCertificate {
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    /// Largest left-hand side over rows (feasible when <= tolerance).
    pub worst_slack: f64,
    pub valid: bool,
}

pub fn ub_certificate(
    problem: &ChanceProblem,
    spec: &AmbiguitySpec,
    p: f64,
    cfg: &JointApproxConfig,
    layout: &JointLayout,
    x: &DVector<f64>,
    tol: f64,
) -> Result<UbCertificate, ReformError> {
    let n = problem.n;
    let case = KpCase::from_spec(spec);
    let weights = layout.implied_weights(x);
    let weight_sum: f64 = weights.iter().sum();
    let z = layout.decode_z(x);
    let mut ztilde = CVector::zeros(n + 1);
    ztilde.rows_mut(0, n).copy_from(&z);
    ztilde[n] = Complex64::new(-1.0, 0.0);
    let wt = stack_re_im(&ztilde);

    let t_lo = cfg.points.first().copied().unwrap_or(0.0);
    let t_hi = cfg.points.last().copied().unwrap_or(1.0);
    let mut worst = f64::NEG_INFINITY;
    let mut weights_ok = true;
    for (i, row) in problem.rows.iter().enumerate() {
        let y = weights[i].clamp(1e-12, 1.0);
        if !(t_lo - 1e-9..=t_hi + 1e-9).contains(&weights[i]) {
            weights_ok = false;
        }
        let k = safety_curve(case, p, cfg.theta, y)
            .map_err(|e| ReformError::BadParameter(e.to_string()))?;
        let jr = joint_row(spec, row, n)?;
        let sigma = (wt.transpose() * &jr.quad * &wt)[(0, 0)].max(0.0).sqrt();
        let mean: f64 = jr
            .mean
            .iter()
            .zip(ztilde.iter())
            .map(|(m, v)| (m * v).re)
            .sum();
        let extra = match &jr.extra {
            Extra::None => 0.0,
            Extra::NormPenalty(r1) => r1 * wt.norm(),
            Extra::Ellipsoid { scale, embed } => {
                scale * (wt.transpose() * embed * &wt)[(0, 0)].max(0.0).sqrt()
            }
        };
        worst = worst.max(mean + extra + k * sigma);
    }
    let valid = weights_ok && (weight_sum - 1.0).abs() <= 1e-6 && worst <= tol;
    Ok(UbCertificate {
        weights,
        weight_sum,
        worst_slack: worst,
        valid,
    })
}
