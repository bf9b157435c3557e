//! Complex moment algebra.
//!
//! A complex random vector `d = x + iy` is characterized by its mean, its
//! Hermitian covariance `Cov(d, d)` and its symmetric pseudo-covariance
//! `Cov(d, d̄)`. The pair (covariance, pseudo-covariance) is equivalent to
//! the real covariance of the stacked vector `[x; y]`:
//!
//! ```txt
//!     K = [ (Re Γ + Re J)/2   (Im J − Im Γ)/2 ]
//!         [ (Im J + Im Γ)/2   (Re Γ − Re J)/2 ]
//! ```
//!
//! Two real quadratic forms of K appear downstream and differ only in the
//! sign of the imaginary stacking:
//!
//! * `Re(c^H z)` (objective form): variance `= [Re z; Im z]' K [Re z; Im z]
//!   = (z^H Γ z + Re(z^H J z̄))/2`;
//! * `Re(a z)` (constraint form, no conjugation): variance
//!   `= [Re z; −Im z]' K [Re z; −Im z] = (z^T Γ z̄ + Re(z^T J z))/2`.
//!
//! Both collapse to the familiar `z^H Γ z` expressions when Γ is real.
//! Callers always stack `[Re z; Im z]`; the sign flip is folded into the
//! matrix returned by [`MomentTriple::constraint_matrix`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for Hermitian / symmetric structure checks.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// The augmented covariance may have eigenvalues down to -PSD_TOL times its
/// spectral radius before being rejected.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MomentError {
    #[error("empty mean vector")]
    EmptyMean,
    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },
    #[error("cov is {rows}x{cols}, expected {n}x{n}")]
    CovShape { rows: usize, cols: usize, n: usize },
    #[error("pcov is {rows}x{cols}, expected {n}x{n}")]
    PcovShape { rows: usize, cols: usize, n: usize },
    #[error("cov not Hermitian at ({row},{col}): |Γ − Γ^H| = {delta:.3e}")]
    NotHermitian { row: usize, col: usize, delta: f64 },
    #[error("pcov not symmetric at ({row},{col}): |J − J^T| = {delta:.3e}")]
    NotSymmetric { row: usize, col: usize, delta: f64 },
    #[error("augmented covariance indefinite: min eigenvalue {min_eig:.3e} vs spectral radius {radius:.3e}")]
    NotPsd { min_eig: f64, radius: f64 },
    #[error("dimension mismatch: z has {got} entries, moments have {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Mean, covariance and pseudo-covariance of a complex random vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTriple {
    pub mean: CVector,
    pub cov: CMatrix,
    pub pcov: CMatrix,
}

/// Real mean and variance of a real-valued affine function of the decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineStats {
    pub mean: f64,
    pub variance: f64,
}

impl MomentTriple {
    /// Validating constructor; see [`validate_moment_triple`].
    pub fn new(mean: CVector, cov: CMatrix, pcov: CMatrix) -> Result<Self, MomentError> {
        let t = MomentTriple { mean, cov, pcov };
        validate_moment_triple(&t)?;
        Ok(t)
    }

    /// Zero-mean proper triple with the given covariance.
    pub fn proper(mean: CVector, cov: CMatrix) -> Result<Self, MomentError> {
        let n = mean.len();
        MomentTriple::new(mean, cov, CMatrix::zeros(n, n))
    }

    /// Deterministic vector (all moments zero).
    pub fn deterministic(mean: CVector) -> Self {
        let n = mean.len();
        MomentTriple {
            mean,
            cov: CMatrix::zeros(n, n),
            pcov: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Covariance of the stacked real vector `[Re d; Im d]`.
    pub fn augmented_covariance(&self) -> DMatrix<f64> {
        augmented_covariance(&self.cov, &self.pcov)
    }

    /// PSD matrix Q with `[Re z; Im z]' Q [Re z; Im z]
    /// = (z^T Γ z̄ + Re(z^T J z))/2`, the variance of `Re(a z)`.
    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        flip_imaginary(&self.augmented_covariance())
    }
}

/// Congruence with `diag(I, -I)`: negates the off-diagonal blocks of a
/// 2n x 2n stacked matrix, turning a plain-stacking quadratic form into the
/// sign-flipped one (and back).
pub fn flip_imaginary(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows() / 2;
    let mut out = k.clone();
    for r in 0..n {
        for c in n..2 * n {
            out[(r, c)] = -out[(r, c)];
            out[(c, r)] = -out[(c, r)];
        }
    }
    out
}

/// Builds the real augmented covariance from the block identities relating
/// (Γ, J) to the covariance of `[Re d; Im d]`.
pub fn augmented_covariance(cov: &CMatrix, pcov: &CMatrix) -> DMatrix<f64> {
    let n = cov.nrows();
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let g = cov[(r, c)];
            let j = pcov[(r, c)];
            k[(r, c)] = (g.re + j.re) / 2.0;
            k[(r, n + c)] = (j.im - g.im) / 2.0;
            k[(n + r, c)] = (j.im + g.im) / 2.0;
            k[(n + r, n + c)] = (g.re - j.re) / 2.0;
        }
    }
    k
}

/// Checks the structural invariants: Hermitian covariance, symmetric
/// pseudo-covariance, positive semidefinite augmented covariance.
pub fn validate_moment_triple(t: &MomentTriple) -> Result<(), MomentError> {
    let n = t.mean.len();
    if n == 0 {
        return Err(MomentError::EmptyMean);
    }
    if t.mean.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(MomentError::NonFinite { what: "mean" });
    }
    if t.cov.nrows() != n || t.cov.ncols() != n {
        return Err(MomentError::CovShape {
            rows: t.cov.nrows(),
            cols: t.cov.ncols(),
            n,
        });
    }
    if t.pcov.nrows() != n || t.pcov.ncols() != n {
        return Err(MomentError::PcovShape {
            rows: t.pcov.nrows(),
            cols: t.pcov.ncols(),
            n,
        });
    }
    for m in [&t.cov, &t.pcov] {
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(MomentError::NonFinite { what: "cov/pcov" });
        }
    }
    let scale = t
        .cov
        .iter()
        .chain(t.pcov.iter())
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for r in 0..n {
        for c in r..n {
            let delta = (t.cov[(r, c)] - t.cov[(c, r)].conj()).norm();
            if delta > STRUCTURE_TOL * scale {
                return Err(MomentError::NotHermitian { row: r, col: c, delta });
            }
            let delta = (t.pcov[(r, c)] - t.pcov[(c, r)]).norm();
            if delta > STRUCTURE_TOL * scale {
                return Err(MomentError::NotSymmetric { row: r, col: c, delta });
            }
        }
    }
    let aug = t.augmented_covariance();
    let eigs = aug.symmetric_eigenvalues();
    let min_eig = eigs.min();
    let radius = eigs.amax();
    if min_eig < -PSD_TOL * radius.max(1e-300) && radius > 0.0 {
        return Err(MomentError::NotPsd { min_eig, radius });
    }
    Ok(())
}

/// Independence-model moments of one row `Re(a z) - b <= 0`: `a` complex with
/// its own triple, `b` real with mean and variance, `a ⟂ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub a: MomentTriple,
    pub b_mean: f64,
    pub b_var: f64,
}

impl ConstraintRow {
    pub fn new(a: MomentTriple, b_mean: f64, b_var: f64) -> Result<Self, MomentError> {
        validate_moment_triple(&a)?;
        if !(b_mean.is_finite() && b_var.is_finite()) || b_var < 0.0 {
            return Err(MomentError::NonFinite { what: "b stats" });
        }
        Ok(ConstraintRow { a, b_mean, b_var })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Moments of the stacked vector `d = [a, b]` under independence: the
    /// real scalar `b` contributes variance to both covariance and
    /// pseudo-covariance diagonals.
    pub fn stacked_moments(&self) -> MomentTriple {
        let n = self.dim();
        let mut mean = CVector::zeros(n + 1);
        mean.rows_mut(0, n).copy_from(&self.a.mean);
        mean[n] = Complex64::new(self.b_mean, 0.0);
        let mut cov = CMatrix::zeros(n + 1, n + 1);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.a.cov);
        cov[(n, n)] = Complex64::new(self.b_var, 0.0);
        let mut pcov = CMatrix::zeros(n + 1, n + 1);
        pcov.view_mut((0, 0), (n, n)).copy_from(&self.a.pcov);
        pcov[(n, n)] = Complex64::new(self.b_var, 0.0);
        MomentTriple { mean, cov, pcov }
    }
}

/// Real stacking `[Re z; Im z]`.
pub fn stack_re_im(z: &CVector) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

/// Mean and variance of `Re(c^H z)` for random `c` and fixed `z`.
pub fn objective_stats(c: &MomentTriple, z: &CVector) -> Result<AffineStats, MomentError> {
    if z.len() != c.dim() {
        return Err(MomentError::DimensionMismatch {
            got: z.len(),
            expected: c.dim(),
        });
    }
    let mean = c
        .mean
        .iter()
        .zip(z.iter())
        .map(|(m, zi)| (m.conj() * zi).re)
        .sum();
    let w = stack_re_im(z);
    let k = c.augmented_covariance();
    let variance = (w.transpose() * k * &w)[(0, 0)].max(0.0);
    Ok(AffineStats { mean, variance })
}

/// Mean and variance of `Re(a z) - b` for a constraint row and fixed `z`.
pub fn constraint_stats(row: &ConstraintRow, z: &CVector) -> Result<AffineStats, MomentError> {
    if z.len() != row.dim() {
        return Err(MomentError::DimensionMismatch {
            got: z.len(),
            expected: row.dim(),
        });
    }
    let mean: f64 = row
        .a
        .mean
        .iter()
        .zip(z.iter())
        .map(|(m, zi)| (m * zi).re)
        .sum::<f64>()
        - row.b_mean;
    let w = stack_re_im(z);
    let q = row.a.constraint_matrix();
    let variance = ((w.transpose() * q * &w)[(0, 0)] + row.b_var).max(0.0);
    Ok(AffineStats { mean, variance })
}

/// Real embedding H of a Hermitian matrix G: `z^H G z = [x; y]' H [x; y]`.
pub fn hermitian_embedding(g: &CMatrix) -> DMatrix<f64> {
    let m = g.nrows();
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    for r in 0..m {
        for c in 0..m {
            h[(r, c)] = g[(r, c)].re;
            h[(m + r, m + c)] = g[(r, c)].re;
            h[(r, m + c)] = -g[(r, c)].im;
            h[(m + r, c)] = g[(r, c)].im;
        }
    }
    h
}

/// Symmetric PSD square root by eigendecomposition; eigenvalues below
/// `-PSD_TOL * radius` are rejected upstream, small negatives clamp to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let se = m.clone().symmetric_eigen();
    let vals = se.eigenvalues.map(|l| l.max(0.0).sqrt());
    &se.eigenvectors * DMatrix::from_diagonal(&vals) * se.eigenvectors.transpose()
}
