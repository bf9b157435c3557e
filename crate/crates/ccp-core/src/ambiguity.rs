//! Deterministic second-order cone counterparts of individual chance
//! constraints `P[Re(a z) - b <= 0] >= p` under seven uncertainty models.
//!
//! Every model reduces to `mean(z) + k * sigma(z) <= 0` plus, for some
//! models, extra norm terms. The safety factor `k` is the marginal quantile
//! for a known elliptical family, `sqrt(p/(1-p))` for moment ambiguity
//! (one-sided Chebyshev), `1/sqrt(2(1-p))` when the law is also symmetric,
//! and `sqrt(2 ln(1/(1-p)))` for componentwise norm-bounded support
//! (Hoeffding). The data-driven model inflates estimated covariance and
//! pseudo-covariance by `r2 I` and penalizes the mean by `r1 ||ztilde||`.
//!
//! Internally every moment-based cone is assembled in "d-space": the row is
//! stacked as `d = [a, b]` with `ztilde = [z; -1]`, so `Re(d ztilde)
//! = Re(a z) - b` and the b-variance rides inside the stacked quadratic
//! form. This keeps the exact-moment, covariance-bound, ellipsoid and
//! data-driven paths on one code path and makes their coincidence
//! invariants hold bit for bit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use socp::{ConeBlock, SocpProblem};
use thiserror::Error;

use crate::dist::{marginal_quantile, CesFamily, DistError};
use crate::moments::{
    flip_imaginary, psd_sqrt, stack_re_im, validate_moment_triple, CMatrix, CVector,
    ConstraintRow, MomentError, MomentTriple,
};

#[derive(Debug, Clone, Error)]
pub enum ReformError {
    #[error("probability level {p} outside the valid range {range} for {model}")]
    InvalidLevel {
        p: f64,
        range: &'static str,
        model: &'static str,
    },
    #[error("{0}")]
    BadParameter(String),
    #[error("row dimension {row} does not match problem dimension {expected}")]
    RowDimension { row: usize, expected: usize },
    #[error("problem has {rows} rows but {levels} levels")]
    LevelCount { rows: usize, levels: usize },
    #[error(transparent)]
    Moments(#[from] MomentError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Uncertainty model governing the reformulation of each row.
#[derive(Debug, Clone)]
pub enum AmbiguitySpec {
    /// The law of `d` is a known elliptical family with the row's moments.
    CesKnown(CesFamily),
    /// Mean, covariance and pseudo-covariance known exactly, law arbitrary.
    MomentExact,
    /// As `MomentExact`, with the law known to be centrally symmetric.
    MomentSymmetric,
    /// Mean known; covariance of the stacked `[Re d; Im d]` bounded above
    /// by `bound` (2(n+1) x 2(n+1), PSD) in the semidefinite order.
    CovBounded { bound: DMatrix<f64> },
    /// Mean within a `zeta`-ellipsoid shaped by `cov` around `mean`;
    /// second moments bounded by (`cov`, `pcov`). All in d-space (dim n+1).
    MomentsEllipsoid {
        zeta: f64,
        mean: CVector,
        cov: CMatrix,
        pcov: CMatrix,
    },
    /// Mean known; the centered components of `d` are independent with
    /// `|d_i - mu_i| <= bounds[i]` (length n+1, entries > 0).
    NormSupport { bounds: DVector<f64> },
    /// Empirical d-space moments with concentration radii `r1` (mean) and
    /// `r2` (covariance and pseudo-covariance, Frobenius).
    DataDriven {
        est: MomentTriple,
        r1: f64,
        r2: f64,
    },
}

impl AmbiguitySpec {
    pub fn label(&self) -> String {
        match self {
            AmbiguitySpec::CesKnown(f) => f.label(),
            AmbiguitySpec::MomentExact => "moment_exact".into(),
            AmbiguitySpec::MomentSymmetric => "moment_symmetric".into(),
            AmbiguitySpec::CovBounded { .. } => "cov_bounded".into(),
            AmbiguitySpec::MomentsEllipsoid { .. } => "moments_ellipsoid".into(),
            AmbiguitySpec::NormSupport { .. } => "norm_support".into(),
            AmbiguitySpec::DataDriven { .. } => "data_driven".into(),
        }
    }

    fn model_name(&self) -> &'static str {
        match self {
            AmbiguitySpec::CesKnown(_) => "ces_known",
            AmbiguitySpec::MomentExact => "moment_exact",
            AmbiguitySpec::MomentSymmetric => "moment_symmetric",
            AmbiguitySpec::CovBounded { .. } => "cov_bounded",
            AmbiguitySpec::MomentsEllipsoid { .. } => "moments_ellipsoid",
            AmbiguitySpec::NormSupport { .. } => "norm_support",
            AmbiguitySpec::DataDriven { .. } => "data_driven",
        }
    }

    /// Valid probability range for the model.
    pub fn level_range(&self) -> (f64, &'static str) {
        match self {
            AmbiguitySpec::CesKnown(_) | AmbiguitySpec::MomentSymmetric => (0.5, "[0.5, 1)"),
            _ => (0.0, "(0, 1)"),
        }
    }

    pub fn check_level(&self, p: f64) -> Result<(), ReformError> {
        let (lo, range) = self.level_range();
        let ok = if lo == 0.5 {
            (0.5..1.0).contains(&p)
        } else {
            p > 0.0 && p < 1.0
        };
        if ok {
            Ok(())
        } else {
            Err(ReformError::InvalidLevel {
                p,
                range,
                model: self.model_name(),
            })
        }
    }
}

/// Scalar multiplying the standard deviation in the deterministic
/// counterpart.
pub fn safety_factor(spec: &AmbiguitySpec, p: f64) -> Result<f64, ReformError> {
    spec.check_level(p)?;
    Ok(match spec {
        AmbiguitySpec::CesKnown(family) => marginal_quantile(*family, p)?,
        AmbiguitySpec::MomentExact
        | AmbiguitySpec::CovBounded { .. }
        | AmbiguitySpec::MomentsEllipsoid { .. }
        | AmbiguitySpec::DataDriven { .. } => (p / (1.0 - p)).sqrt(),
        AmbiguitySpec::MomentSymmetric => 1.0 / (2.0 * (1.0 - p)).sqrt(),
        AmbiguitySpec::NormSupport { .. } => (-2.0 * (1.0 - p).ln()).sqrt(),
    })
}

/// Reformulated row: cone blocks over the layout `[Re z; Im z; aux...]`
/// (width `2n + aux`).
#[derive(Debug, Clone)]
pub struct RowReform {
    pub cones: Vec<ConeBlock>,
    pub aux: usize,
    /// True when the model is a sufficient (not equivalent) condition, so
    /// reports should label results conservative.
    pub conservative: bool,
}

/// Coefficients of `Re(mu z)` over `[Re z; Im z]` for a row-product mean
/// (no conjugation): `Re(mu_k z_k) = Re(mu_k) x_k - Im(mu_k) y_k`.
pub(crate) fn row_mean_coeffs(mu: &CVector) -> DVector<f64> {
    let n = mu.len();
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            mu[i].re
        } else {
            -mu[i - n].im
        }
    })
}

/// Affine map from `[Re z; Im z]` to the plain stacking of `[z; -1]`:
/// `w = P x + e` with `w = [Re z; -1; Im z; 0]`.
pub(crate) fn dspace_map(n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut p = DMatrix::zeros(2 * (n + 1), 2 * n);
    let mut e = DVector::zeros(2 * (n + 1));
    for j in 0..n {
        p[(j, j)] = 1.0;
        p[(n + 1 + j, n + j)] = 1.0;
    }
    e[n] = -1.0;
    (p, e)
}

/// Single cone `||k F (P x + e)|| <= -(mean)` from a d-space quadratic
/// matrix `q` (already in constraint form) and a d-space mean. The
/// quadratic reads the `2n` columns starting at `quad_offset` (the decision
/// itself for individual rows, the `r_i` surrogate in the joint builder);
/// the mean always reads the decision columns at 0.
pub(crate) fn dspace_cone_at(
    q: &DMatrix<f64>,
    mean_d: &CVector,
    k: f64,
    n: usize,
    width: usize,
    quad_offset: usize,
) -> ConeBlock {
    let f = psd_sqrt(q);
    let (p, e) = dspace_map(n);
    let a_z = k * &f * p;
    let b = k * f * e;
    let mut a = DMatrix::zeros(a_z.nrows(), width);
    a.view_mut((0, quad_offset), (a_z.nrows(), 2 * n))
        .copy_from(&a_z);
    let mean_z = row_mean_coeffs(&mean_d.rows(0, n).into_owned());
    let mut c = DVector::zeros(width);
    c.rows_mut(0, 2 * n).copy_from(&(-&mean_z));
    // Re(mu_{n+1} * (-1)) contributes -Re(mu_b) to the mean
    ConeBlock {
        a,
        b,
        c,
        d: mean_d[n].re,
    }
}

fn dspace_cone(q: &DMatrix<f64>, mean_d: &CVector, k: f64, n: usize, width: usize) -> ConeBlock {
    dspace_cone_at(q, mean_d, k, n, width, 0)
}

/// Converts one chance constraint into its deterministic cone block(s) over
/// the layout `[Re z; Im z; aux...]`.
pub fn reformulate_constraint(
    spec: &AmbiguitySpec,
    row: &ConstraintRow,
    p: f64,
    n: usize,
) -> Result<RowReform, ReformError> {
    if row.dim() != n {
        return Err(ReformError::RowDimension {
            row: row.dim(),
            expected: n,
        });
    }
    let k = safety_factor(spec, p)?;
    let width = 2 * n;
    match spec {
        AmbiguitySpec::CesKnown(_)
        | AmbiguitySpec::MomentExact
        | AmbiguitySpec::MomentSymmetric => {
            let d = row.stacked_moments();
            validate_moment_triple(&d)?;
            let cone = dspace_cone(&d.constraint_matrix(), &d.mean, k, n, width);
            Ok(RowReform {
                cones: vec![cone],
                aux: 0,
                conservative: false,
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
            let eigs = bound.symmetric_eigenvalues();
            if eigs.min() < -1e-9 * eigs.amax().max(1e-300) {
                return Err(ReformError::BadParameter(
                    "covariance bound is not positive semidefinite".into(),
                ));
            }
            validate_moment_triple(&row.a)?;
            let d_mean = row.stacked_moments().mean;
            // worst-case variance is the bound itself, in constraint form
            let cone = dspace_cone(&flip_imaginary(bound), &d_mean, k, n, width);
            Ok(RowReform {
                cones: vec![cone],
                aux: 0,
                conservative: false,
            })
        }
        AmbiguitySpec::MomentsEllipsoid {
            zeta,
            mean,
            cov,
            pcov,
        } => {
            if *zeta < 0.0 {
                return Err(ReformError::BadParameter(format!(
                    "ellipsoid size {zeta} must be nonnegative"
                )));
            }
            if mean.len() != n + 1 {
                return Err(ReformError::BadParameter(format!(
                    "ellipsoid mean has dimension {}, expected {}",
                    mean.len(),
                    n + 1
                )));
            }
            let est = MomentTriple {
                mean: mean.clone(),
                cov: cov.clone(),
                pcov: pcov.clone(),
            };
            validate_moment_triple(&est)?;
            let gamma_emb = hermitian_embedding(cov)?;
            if *zeta == 0.0 {
                // vanishing ellipsoid: exactly the known-moments block
                let cone = dspace_cone(&est.constraint_matrix(), &est.mean, k, n, width);
                return Ok(RowReform {
                    cones: vec![cone],
                    aux: 0,
                    conservative: false,
                });
            }
            // mean + sqrt(zeta) ||Γ^{1/2} ztilde|| + k sigma <= 0 with two
            // auxiliary epigraph variables u, v
            let width = 2 * n + 2;
            let (u_idx, v_idx) = (2 * n, 2 * n + 1);
            let (pm, e) = dspace_map(n);
            let f_g = psd_sqrt(&gamma_emb);
            let mut ell = widen_cone(
                zeta.sqrt() * &f_g * &pm,
                zeta.sqrt() * f_g * &e,
                width,
                n,
            );
            ell.c[u_idx] = 1.0;
            let var_cone = dspace_cone(&est.constraint_matrix(), &est.mean, k, n, width);
            let mut var_cone = var_cone;
            // route the quadratic term through v instead of the mean side
            let d_keep = var_cone.d;
            let mut lin_c = var_cone.c.clone();
            var_cone.c = DVector::zeros(width);
            var_cone.c[v_idx] = 1.0;
            var_cone.d = 0.0;
            lin_c[u_idx] = -1.0;
            lin_c[v_idx] = -1.0;
            let linear = ConeBlock::linear(lin_c, d_keep);
            Ok(RowReform {
                cones: vec![ell, var_cone, linear],
                aux: 2,
                conservative: false,
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
            if bounds.iter().any(|&l| !(l > 0.0)) {
                return Err(ReformError::BadParameter(
                    "norm bounds must be strictly positive".into(),
                ));
            }
            validate_moment_triple(&row.a)?;
            // || diag(l) ztilde ||: one row per real coordinate plus the
            // constant row for the b component
            let mut a = DMatrix::zeros(2 * n + 1, width);
            let mut b = DVector::zeros(2 * n + 1);
            for j in 0..n {
                a[(j, j)] = k * bounds[j];
                a[(n + j, n + j)] = k * bounds[j];
            }
            b[2 * n] = k * bounds[n];
            let mean_z = row_mean_coeffs(&row.a.mean);
            let c = -mean_z;
            Ok(RowReform {
                cones: vec![ConeBlock {
                    a,
                    b,
                    c,
                    d: row.b_mean,
                }],
                aux: 0,
                conservative: true,
            })
        }
        AmbiguitySpec::DataDriven { est, r1, r2 } => {
            if *r1 < 0.0 || *r2 < 0.0 {
                return Err(ReformError::BadParameter(format!(
                    "concentration radii must be nonnegative, got r1 = {r1}, r2 = {r2}"
                )));
            }
            if est.dim() != n + 1 {
                return Err(ReformError::BadParameter(format!(
                    "estimated moments have dimension {}, expected {}",
                    est.dim(),
                    n + 1
                )));
            }
            validate_moment_triple(est)?;
            let inflated = inflate_moments(est, *r2);
            if *r1 == 0.0 {
                let cone = dspace_cone(&inflated.constraint_matrix(), &inflated.mean, k, n, width);
                return Ok(RowReform {
                    cones: vec![cone],
                    aux: 0,
                    conservative: true,
                });
            }
            // mean + r1 ||ztilde|| + k sigma <= 0 via two epigraph variables
            let width = 2 * n + 2;
            let (u_idx, v_idx) = (2 * n, 2 * n + 1);
            let (pm, e) = dspace_map(n);
            let mut norm_cone = widen_cone(*r1 * &pm, *r1 * &e, width, n);
            norm_cone.c[u_idx] = 1.0;
            let mut var_cone =
                dspace_cone(&inflated.constraint_matrix(), &inflated.mean, k, n, width);
            let d_keep = var_cone.d;
            let mut lin_c = var_cone.c.clone();
            var_cone.c = DVector::zeros(width);
            var_cone.c[v_idx] = 1.0;
            var_cone.d = 0.0;
            lin_c[u_idx] = -1.0;
            lin_c[v_idx] = -1.0;
            let linear = ConeBlock::linear(lin_c, d_keep);
            Ok(RowReform {
                cones: vec![norm_cone, var_cone, linear],
                aux: 2,
                conservative: true,
            })
        }
    }
}

/// `cov` and `pcov` each inflated by `r2 I`, the data-driven
/// robustification of estimated second moments.
pub fn inflate_moments(est: &MomentTriple, r2: f64) -> MomentTriple {
    let m = est.dim();
    let mut cov = est.cov.clone();
    let mut pcov = est.pcov.clone();
    for i in 0..m {
        cov[(i, i)] += Complex64::new(r2, 0.0);
        pcov[(i, i)] += Complex64::new(r2, 0.0);
    }
    MomentTriple {
        mean: est.mean.clone(),
        cov,
        pcov,
    }
}

/// Hermitian embedding checked positive definite (the ellipsoid shape needs
/// an invertible square root).
pub(crate) fn hermitian_embedding(g: &CMatrix) -> Result<DMatrix<f64>, ReformError> {
    let h = crate::moments::hermitian_embedding(g);
    let eigs = h.symmetric_eigenvalues();
    if eigs.min() < 1e-10 * eigs.amax().max(1e-300) {
        return Err(ReformError::BadParameter(
            "ellipsoid shape matrix must be positive definite".into(),
        ));
    }
    Ok(h)
}

/// Pads a cone `||A_z x_z + b|| <= 0` (norm part only) to `width` columns.
fn widen_cone(a_z: DMatrix<f64>, b: DVector<f64>, width: usize, n: usize) -> ConeBlock {
    let mut a = DMatrix::zeros(a_z.nrows(), width);
    a.view_mut((0, 0), (a_z.nrows(), 2 * n)).copy_from(&a_z);
    ConeBlock {
        a,
        b,
        c: DVector::zeros(width),
        d: 0.0,
    }
}

/// Objective of a chance problem.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Deterministic cost vector: minimize `Re(c^H z)`.
    Deterministic(CVector),
    /// Random cost with the given moments: minimize the epigraph `t` with
    /// `P[Re(c^H z) <= t] >= level`.
    Random { moments: MomentTriple, level: f64 },
}

/// Linear chance-constrained program over complex decisions.
#[derive(Debug, Clone)]
pub struct ChanceProblem {
    pub n: usize,
    pub objective: Objective,
    pub rows: Vec<ConstraintRow>,
    pub levels: Vec<f64>,
    /// Componentwise `Re z >= 0`, `Im z >= 0`; required by the joint
    /// formulation, optional for individual constraints.
    pub sign_constraints: bool,
}

impl ChanceProblem {
    /// Shape and moment-structure checks, independent of the model.
    pub fn validate_structure(&self) -> Result<(), ReformError> {
        if self.rows.len() != self.levels.len() {
            return Err(ReformError::LevelCount {
                rows: self.rows.len(),
                levels: self.levels.len(),
            });
        }
        for row in &self.rows {
            if row.dim() != self.n {
                return Err(ReformError::RowDimension {
                    row: row.dim(),
                    expected: self.n,
                });
            }
            validate_moment_triple(&row.a)?;
        }
        match &self.objective {
            Objective::Deterministic(c) => {
                if c.len() != self.n {
                    return Err(ReformError::RowDimension {
                        row: c.len(),
                        expected: self.n,
                    });
                }
            }
            Objective::Random { moments, .. } => {
                if moments.dim() != self.n {
                    return Err(ReformError::RowDimension {
                        row: moments.dim(),
                        expected: self.n,
                    });
                }
                validate_moment_triple(moments)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self, spec: &AmbiguitySpec) -> Result<(), ReformError> {
        self.validate_structure()?;
        for &p in &self.levels {
            spec.check_level(p)?;
        }
        if let Objective::Random { level, .. } = &self.objective {
            spec.check_level(*level)?;
        }
        Ok(())
    }
}

/// Variable layout of a reformulated problem: `[Re z; Im z]`, then the
/// epigraph variable for a random objective, then per-row auxiliaries.
#[derive(Debug, Clone)]
pub struct ReformLayout {
    pub n: usize,
    pub nvars: usize,
    pub epigraph: Option<usize>,
    pub conservative: bool,
}

impl ReformLayout {
    /// Complex decision recovered from a solution vector.
    pub fn decode_z(&self, x: &DVector<f64>) -> CVector {
        CVector::from_fn(self.n, |i, _| Complex64::new(x[i], x[self.n + i]))
    }
}

/// Reformulates the whole problem with one model per row.
pub fn reformulate_problem_per_row(
    problem: &ChanceProblem,
    specs: &[AmbiguitySpec],
) -> Result<(SocpProblem, ReformLayout), ReformError> {
    if specs.len() != problem.rows.len() {
        return Err(ReformError::LevelCount {
            rows: problem.rows.len(),
            levels: specs.len(),
        });
    }
    problem.validate_structure()?;
    for (spec, &p) in specs.iter().zip(&problem.levels) {
        spec.check_level(p)?;
    }
    if let Objective::Random { level, .. } = &problem.objective {
        if let Some(first) = specs.first() {
            first.check_level(*level)?;
        }
    }
    let n = problem.n;
    let reforms: Vec<RowReform> = problem
        .rows
        .iter()
        .zip(problem.levels.iter())
        .zip(specs.iter())
        .map(|((row, &p), spec)| reformulate_constraint(spec, row, p, n))
        .collect::<Result<_, _>>()?;

    let epigraph = matches!(problem.objective, Objective::Random { .. });
    let mut nvars = 2 * n + usize::from(epigraph);
    let mut aux_offsets = Vec::with_capacity(reforms.len());
    for r in &reforms {
        aux_offsets.push(nvars);
        nvars += r.aux;
    }

    let mut socp = SocpProblem::new(DVector::zeros(nvars));
    match &problem.objective {
        Objective::Deterministic(c) => {
            for i in 0..n {
                socp.objective[i] = c[i].re;
                socp.objective[n + i] = c[i].im;
            }
        }
        Objective::Random { moments, level } => {
            let t_idx = 2 * n;
            socp.objective[t_idx] = 1.0;
            // spec[0] provides the safety factor for the epigraph cone
            let k0 = safety_factor(&specs[0], *level)?;
            let f = psd_sqrt(&moments.augmented_covariance());
            let mut a = DMatrix::zeros(2 * n, nvars);
            a.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&(k0 * f));
            let mut c = DVector::zeros(nvars);
            for i in 0..n {
                // objective mean is conjugated: Re(mu^H z)
                c[i] = -moments.mean[i].re;
                c[n + i] = -moments.mean[i].im;
            }
            c[t_idx] = 1.0;
            socp.cone_blocks.push(ConeBlock {
                a,
                b: DVector::zeros(2 * n),
                c,
                d: 0.0,
            });
        }
    }

    for (r, &off) in reforms.iter().zip(&aux_offsets) {
        for blk in &r.cones {
            socp.cone_blocks.push(relocate(blk, 2 * n, off, nvars));
        }
    }
    if problem.sign_constraints {
        socp.nonneg = (0..2 * n).collect();
    }
    Ok((
        socp,
        ReformLayout {
            n,
            nvars,
            epigraph: epigraph.then_some(2 * n),
            conservative: reforms.iter().any(|r| r.conservative),
        },
    ))
}

/// Reformulates the whole problem under a single model.
pub fn reformulate_problem(
    problem: &ChanceProblem,
    spec: &AmbiguitySpec,
) -> Result<(SocpProblem, ReformLayout), ReformError> {
    problem.validate(spec)?;
    let specs = vec![spec.clone(); problem.rows.len()];
    reformulate_problem_per_row(problem, &specs)
}

/// Moves a block written over `[z (2n); own aux]` into the global layout
/// with the row's auxiliaries at `aux_offset`.
fn relocate(blk: &ConeBlock, src_aux_start: usize, aux_offset: usize, nvars: usize) -> ConeBlock {
    let rows = blk.a.nrows();
    let src_cols = blk.a.ncols();
    let mut a = DMatrix::zeros(rows, nvars);
    let mut c = DVector::zeros(nvars);
    for j in 0..src_cols {
        let dst = if j < src_aux_start {
            j
        } else {
            aux_offset + (j - src_aux_start)
        };
        for i in 0..rows {
            a[(i, dst)] = blk.a[(i, j)];
        }
        c[dst] = blk.c[j];
    }
    ConeBlock {
        a,
        b: blk.b.clone(),
        c,
        d: blk.d,
    }
}

/// Evaluates the deterministic left side `mean + k sigma (+ extra terms)`
/// of a reformulated row at a decision `z`; nonpositive means feasible.
/// Auxiliary epigraph variables are placed at their optima
/// `u = ||A_u x + b_u||`, so the result matches the model inequality
/// directly. Used by tests to check cone blocks against the theorems.
pub fn row_margin(reform: &RowReform, z: &CVector) -> f64 {
    let n = z.len();
    let mut x = DVector::zeros(2 * n + reform.aux);
    x.rows_mut(0, 2 * n).copy_from(&stack_re_im(z));
    for blk in &reform.cones {
        // an epigraph cone selects exactly one auxiliary in its affine side
        let aux_idx = (2 * n..x.len()).find(|&i| blk.c[i] != 0.0);
        if let (Some(i), true) = (aux_idx, blk.a.nrows() > 0) {
            x[i] = (&blk.a * &x + &blk.b).norm() / blk.c[i];
        }
    }
    reform
        .cones
        .iter()
        .map(|blk| -blk.margin(&x))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn simple_row(n: usize) -> ConstraintRow {
        ConstraintRow::new(
            MomentTriple::proper(
                CVector::from_fn(n, |i, _| c64(1.0 + i as f64 * 0.1, -0.2)),
                CMatrix::identity(n, n),
            )
            .unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn cantelli_factor_at_three_quarters() {
        assert_relative_eq!(
            safety_factor(&AmbiguitySpec::MomentExact, 0.75).unwrap(),
            3f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn symmetric_factor_at_seven_eighths() {
        assert_relative_eq!(
            safety_factor(&AmbiguitySpec::MomentSymmetric, 0.875).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hoeffding_factor_at_one_minus_exp_minus_two() {
        let p = 1.0 - (-2.0f64).exp();
        let spec = AmbiguitySpec::NormSupport {
            bounds: DVector::from_vec(vec![1.0, 1.0]),
        };
        assert_relative_eq!(safety_factor(&spec, p).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn level_ranges_enforced() {
        assert!(safety_factor(&AmbiguitySpec::MomentSymmetric, 0.4).is_err());
        assert!(safety_factor(&AmbiguitySpec::CesKnown(CesFamily::Gaussian), 0.3).is_err());
        assert!(safety_factor(&AmbiguitySpec::MomentExact, 0.3).is_ok());
        assert!(safety_factor(&AmbiguitySpec::MomentExact, 1.0).is_err());
    }

    #[test]
    fn conservatism_ordering_and_monotonicity() {
        let gauss = AmbiguitySpec::CesKnown(CesFamily::Gaussian);
        let mut prev = [f64::NEG_INFINITY; 3];
        let mut p = 0.5;
        while p < 0.999 {
            let kg = safety_factor(&gauss, p).unwrap();
            let ks = safety_factor(&AmbiguitySpec::MomentSymmetric, p).unwrap();
            let km = safety_factor(&AmbiguitySpec::MomentExact, p).unwrap();
            assert!(kg <= ks + 1e-12 && ks <= km + 1e-12, "ordering at p = {p}");
            assert!(kg > prev[0] && ks > prev[1] && km > prev[2], "monotone at p = {p}");
            prev = [kg, ks, km];
            p += 0.004;
        }
    }

    #[test]
    fn zero_variance_row_reduces_to_linear() {
        let row = ConstraintRow::new(
            MomentTriple::deterministic(CVector::from_vec(vec![c64(2.0, 1.0)])),
            3.0,
            0.0,
        )
        .unwrap();
        let r = reformulate_constraint(&AmbiguitySpec::MomentExact, &row, 0.9, 1).unwrap();
        assert_eq!(r.cones.len(), 1);
        let blk = &r.cones[0];
        assert!(blk.a.iter().all(|&v| v == 0.0));
        assert!(blk.b.iter().all(|&v| v == 0.0));
        // margin is mu_b - Re(mu_a z): feasible iff Re(2z_re - 1z_im...) <= 3
        let x = DVector::from_vec(vec![1.0, 0.5]);
        // Re((2+i)(1 + 0.5i)) = 2*1 - 1*0.5 = 1.5
        assert_relative_eq!(blk.margin(&x), 3.0 - 1.5, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_cone_carries_quantile_scaling() {
        let row = simple_row(2);
        let spec = AmbiguitySpec::CesKnown(CesFamily::Gaussian);
        let r = reformulate_constraint(&spec, &row, 0.95, 2).unwrap();
        let z = CVector::from_vec(vec![c64(0.3, -0.4), c64(0.1, 0.2)]);
        let x = stack_re_im(&z);
        let blk = &r.cones[0];
        // ||A x + b|| must equal 1.6449 ||z|| / sqrt(2) for Γ = I, J = 0, σ_b = 0
        let want = 1.6448536269514722 * z.norm() / 2f64.sqrt();
        assert_relative_eq!((&blk.a * &x + &blk.b).norm(), want, epsilon = 1e-9);
        assert_relative_eq!(blk.c.dot(&x) + blk.d, 1.0 - row_mean(&row, &z), epsilon = 1e-12);
    }

    fn row_mean(row: &ConstraintRow, z: &CVector) -> f64 {
        row.a
            .mean
            .iter()
            .zip(z.iter())
            .map(|(m, v)| (m * v).re)
            .sum::<f64>()
    }

    #[test]
    fn vanishing_ellipsoid_equals_moment_exact() {
        let row = simple_row(2);
        let d = row.stacked_moments();
        let spec = AmbiguitySpec::MomentsEllipsoid {
            zeta: 0.0,
            mean: d.mean.clone(),
            cov: d.cov.clone() + CMatrix::identity(3, 3) * c64(1e-6, 0.0),
            pcov: d.pcov.clone(),
        };
        // same moments through the exact path
        let exact = AmbiguitySpec::DataDriven {
            est: MomentTriple {
                mean: d.mean.clone(),
                cov: d.cov.clone() + CMatrix::identity(3, 3) * c64(1e-6, 0.0),
                pcov: d.pcov.clone(),
            },
            r1: 0.0,
            r2: 0.0,
        };
        let a = reformulate_constraint(&spec, &row, 0.8, 2).unwrap();
        let b = reformulate_constraint(&exact, &row, 0.8, 2).unwrap();
        assert_eq!(a.cones.len(), 1);
        assert_eq!(a.cones[0].a, b.cones[0].a);
        assert_eq!(a.cones[0].b, b.cones[0].b);
        assert_eq!(a.cones[0].c, b.cones[0].c);
        assert_eq!(a.cones[0].d, b.cones[0].d);
    }

    #[test]
    fn data_driven_zero_radii_bitwise_equals_moment_exact() {
        let row = simple_row(3);
        let est = row.stacked_moments();
        let dd = AmbiguitySpec::DataDriven {
            est,
            r1: 0.0,
            r2: 0.0,
        };
        let a = reformulate_constraint(&dd, &row, 0.9, 3).unwrap();
        let b = reformulate_constraint(&AmbiguitySpec::MomentExact, &row, 0.9, 3).unwrap();
        assert_eq!(a.cones[0].a, b.cones[0].a);
        assert_eq!(a.cones[0].b, b.cones[0].b);
        assert_eq!(a.cones[0].c, b.cones[0].c);
        assert_eq!(a.cones[0].d, b.cones[0].d);
    }

    #[test]
    fn cov_bound_at_true_covariance_equals_moment_exact() {
        let row = simple_row(2);
        let bound = row.stacked_moments().augmented_covariance();
        let a = reformulate_constraint(&AmbiguitySpec::CovBounded { bound }, &row, 0.7, 2).unwrap();
        let b = reformulate_constraint(&AmbiguitySpec::MomentExact, &row, 0.7, 2).unwrap();
        assert_eq!(a.cones[0].a, b.cones[0].a);
        assert_eq!(a.cones[0].c, b.cones[0].c);
        assert_eq!(a.cones[0].d, b.cones[0].d);
    }

    #[test]
    fn norm_support_rejects_nonpositive_bounds() {
        let row = simple_row(1);
        let spec = AmbiguitySpec::NormSupport {
            bounds: DVector::from_vec(vec![1.0, 0.0]),
        };
        assert!(reformulate_constraint(&spec, &row, 0.8, 1).is_err());
    }

    #[test]
    fn data_driven_rejects_negative_radii() {
        let row = simple_row(1);
        let spec = AmbiguitySpec::DataDriven {
            est: row.stacked_moments(),
            r1: -0.1,
            r2: 0.0,
        };
        assert!(reformulate_constraint(&spec, &row, 0.8, 1).is_err());
    }
}
