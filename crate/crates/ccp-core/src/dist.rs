//! Elliptical families: marginal quantiles, densities, and complex
//! random-vector samplers driven by a moment triple.
//!
//! Quantiles and CDFs are those of the classical unit-scale marginals
//! (standard normal, Student-t with `nu` degrees of freedom, standard
//! Laplace, standard logistic, standard Cauchy). Samplers standardize each
//! family to unit variance before mixing with the covariance factor, so the
//! empirical moments of the draws match the requested triple; the Cauchy
//! (and Student-t with `nu <= 2`) has no variance and is drawn at unit
//! scale instead, with moment matching waived.
//!
//! Gaussian, Student-t and Cauchy vectors use exact elliptical stochastic
//! representations (a shared radial mixing scalar per draw). Laplace and
//! logistic vectors are built from independent standardized univariate
//! draws pushed through the covariance factor: first and second moments
//! match the triple exactly, but the resulting law is not elliptically
//! symmetric. That is sufficient for everything downstream, which depends
//! on the first two moments only.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::moments::{psd_sqrt, validate_moment_triple, CVector, MomentError, MomentTriple};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DistError {
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("invalid family parameter: {0}")]
    BadParameter(String),
    #[error("quantile unsupported for generalized Gaussian with exponent {s}")]
    UnsupportedQuantile { s: f64 },
    #[error("sample count must be at least 1")]
    BadCount,
    #[error(transparent)]
    Moments(#[from] MomentError),
}

/// Named elliptical families with closed-form marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CesFamily {
    Gaussian,
    StudentT { nu: f64 },
    Laplace,
    Logistic,
    Cauchy,
    GeneralizedGaussian { s: f64, b: f64 },
}

impl CesFamily {
    pub fn validate(&self) -> Result<(), DistError> {
        match *self {
            CesFamily::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => Err(
                DistError::BadParameter(format!("degrees of freedom {nu} must be positive")),
            ),
            CesFamily::GeneralizedGaussian { s, b } if !(s > 0.0 && b > 0.0) => Err(
                DistError::BadParameter(format!("shape {s} and scale {b} must be positive")),
            ),
            _ => Ok(()),
        }
    }

    /// Whether the standardized family has a finite variance; moment
    /// matching is waived otherwise.
    pub fn has_finite_variance(&self) -> bool {
        match *self {
            CesFamily::Cauchy => false,
            CesFamily::StudentT { nu } => nu > 2.0,
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            CesFamily::Gaussian => "gaussian".into(),
            CesFamily::StudentT { nu } => format!("student_t({nu})"),
            CesFamily::Laplace => "laplace".into(),
            CesFamily::Logistic => "logistic".into(),
            CesFamily::Cauchy => "cauchy".into(),
            CesFamily::GeneralizedGaussian { s, b } => format!("generalized_gaussian({s},{b})"),
        }
    }

    /// Maps the generalized Gaussian special cases onto their closed-form
    /// equivalents; other families return themselves.
    fn canonical(&self) -> Result<CesFamily, DistError> {
        match *self {
            CesFamily::GeneralizedGaussian { s, .. } if (s - 1.0).abs() < 1e-12 => {
                Ok(CesFamily::Gaussian)
            }
            CesFamily::GeneralizedGaussian { s, .. } if (s - 0.5).abs() < 1e-12 => {
                Ok(CesFamily::Laplace)
            }
            CesFamily::GeneralizedGaussian { s, .. } => Err(DistError::UnsupportedQuantile { s }),
            f => Ok(f),
        }
    }
}

/// Inverse CDF of the standardized univariate marginal.
pub fn marginal_quantile(family: CesFamily, p: f64) -> Result<f64, DistError> {
    family.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(DistError::InvalidProbability(p));
    }
    Ok(match family.canonical()? {
        CesFamily::Gaussian => Normal::standard().inverse_cdf(p),
        CesFamily::StudentT { nu } => StudentsT::new(0.0, 1.0, nu)
            .map_err(|e| DistError::BadParameter(e.to_string()))?
            .inverse_cdf(p),
        CesFamily::Laplace => {
            if p < 0.5 {
                (2.0 * p).ln()
            } else {
                -(2.0 * (1.0 - p)).ln()
            }
        }
        CesFamily::Logistic => (p / (1.0 - p)).ln(),
        CesFamily::Cauchy => (std::f64::consts::PI * (p - 0.5)).tan(),
        CesFamily::GeneralizedGaussian { .. } => unreachable!("canonicalized above"),
    })
}

/// CDF of the standardized univariate marginal.
pub fn marginal_cdf(family: CesFamily, x: f64) -> Result<f64, DistError> {
    family.validate()?;
    Ok(match family.canonical()? {
        CesFamily::Gaussian => Normal::standard().cdf(x),
        CesFamily::StudentT { nu } => StudentsT::new(0.0, 1.0, nu)
            .map_err(|e| DistError::BadParameter(e.to_string()))?
            .cdf(x),
        CesFamily::Laplace => {
            if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            }
        }
        CesFamily::Logistic => 1.0 / (1.0 + (-x).exp()),
        CesFamily::Cauchy => 0.5 + x.atan() / std::f64::consts::PI,
        CesFamily::GeneralizedGaussian { .. } => unreachable!("canonicalized above"),
    })
}

/// Density of the standardized univariate marginal.
pub fn marginal_pdf(family: CesFamily, x: f64) -> Result<f64, DistError> {
    family.validate()?;
    Ok(match family.canonical()? {
        CesFamily::Gaussian => Normal::standard().pdf(x),
        CesFamily::StudentT { nu } => StudentsT::new(0.0, 1.0, nu)
            .map_err(|e| DistError::BadParameter(e.to_string()))?
            .pdf(x),
        CesFamily::Laplace => 0.5 * (-x.abs()).exp(),
        CesFamily::Logistic => {
            let e = (-x).exp();
            e / ((1.0 + e) * (1.0 + e))
        }
        CesFamily::Cauchy => 1.0 / (std::f64::consts::PI * (1.0 + x * x)),
        CesFamily::GeneralizedGaussian { .. } => unreachable!("canonicalized above"),
    })
}

/// Reproducible random stream: same `(seed, stream)` gives identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        SeededStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn clamp_unit(u: f64) -> f64 {
    u.max(1e-16).min(1.0 - 1e-16)
}

/// One standardized univariate draw (unit variance when it exists).
pub fn draw_standardized(family: CesFamily, rng: &mut ChaCha8Rng) -> f64 {
    match family.canonical().expect("validated family") {
        CesFamily::Gaussian => rng.sample(StandardNormal),
        CesFamily::StudentT { nu } => {
            let g: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(ChiSquared::new(nu).expect("nu > 0"));
            let t = g * (nu / v).sqrt();
            if nu > 2.0 {
                t * ((nu - 2.0) / nu).sqrt()
            } else {
                t
            }
        }
        CesFamily::Cauchy => {
            let g: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(ChiSquared::new(1.0).expect("static"));
            g / v.sqrt()
        }
        CesFamily::Laplace => {
            let u = clamp_unit(rng.gen::<f64>());
            let q = if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            };
            q / std::f64::consts::SQRT_2
        }
        CesFamily::Logistic => {
            let u = clamp_unit(rng.gen::<f64>());
            (u / (1.0 - u)).ln() * 3f64.sqrt() / std::f64::consts::PI
        }
        CesFamily::GeneralizedGaussian { .. } => unreachable!("canonicalized above"),
    }
}

/// Standardized real vector of length `dim`: identity covariance for the
/// finite-variance families, identity scatter for the heavy-tailed ones.
/// Gaussian, Student-t and Cauchy share one radial mixing scalar per draw;
/// Laplace and logistic use independent components.
fn draw_standardized_vector(family: CesFamily, dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    match family.canonical().expect("validated family") {
        CesFamily::Gaussian => DVector::from_fn(dim, |_, _| rng.sample(StandardNormal)),
        CesFamily::StudentT { nu } => {
            let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v: f64 = rng.sample(ChiSquared::new(nu).expect("nu > 0"));
            let scale = (nu / v).sqrt() * if nu > 2.0 { ((nu - 2.0) / nu).sqrt() } else { 1.0 };
            g * scale
        }
        CesFamily::Cauchy => {
            let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v: f64 = rng.sample(ChiSquared::new(1.0).expect("static"));
            g / v.sqrt()
        }
        _ => DVector::from_fn(dim, |_, _| draw_standardized(family, rng)),
    }
}

/// Draws `count` complex vectors with moments `m`: `X = mean + L xi` where
/// `L` is the symmetric PSD square root of the augmented covariance.
pub fn sample_complex(
    family: CesFamily,
    m: &MomentTriple,
    count: usize,
    stream: SeededStream,
) -> Result<Vec<CVector>, DistError> {
    family.validate()?;
    validate_moment_triple(m)?;
    if count == 0 {
        return Err(DistError::BadCount);
    }
    let n = m.dim();
    let l = psd_sqrt(&m.augmented_covariance());
    let mean = crate::moments::stack_re_im(&m.mean);
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let xi = draw_standardized_vector(family, 2 * n, &mut rng);
        let w = &mean + &l * xi;
        out.push(CVector::from_fn(n, |i, _| {
            Complex64::new(w[i], w[n + i])
        }));
    }
    Ok(out)
}
