//! Empirical moments of complex samples and the concentration radii that
//! back the data-driven model.
//!
//! For N independent samples with support radius R (largest norm over the
//! support), the empirical mean is within
//! `r1 = (R/sqrt(N)) (2 + sqrt(2 ln(6/delta)))` of the truth and the
//! empirical covariance and pseudo-covariance within
//! `r2 = (2 R^2/sqrt(N)) (2 + sqrt(2 ln(6/delta)))` in Frobenius norm,
//! jointly with probability at least `1 - delta`, provided
//! `N >= (2 + sqrt(2 ln(6/delta)))^2`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::moments::{CMatrix, CVector, MomentTriple};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample {index} has dimension {got}, expected {expected}")]
    RaggedSample {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("support radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("confidence delta {0} outside (0, 1)")]
    BadDelta(f64),
    #[error("sample count must be at least 1")]
    BadCount,
    #[error("line {line}: expected an even number of floats, got {count}")]
    OddFloatCount { line: usize, count: usize },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: std::num::ParseFloatError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable batch of complex samples of uniform dimension.
#[derive(Debug, Clone)]
pub struct SampleSet {
    samples: Vec<CVector>,
}

impl SampleSet {
    pub fn new(samples: Vec<CVector>) -> Result<Self, EstimationError> {
        if samples.is_empty() {
            return Err(EstimationError::Empty);
        }
        let dim = samples[0].len();
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(EstimationError::RaggedSample {
                    index: i,
                    got: s.len(),
                    expected: dim,
                });
            }
        }
        Ok(SampleSet { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn samples(&self) -> &[CVector] {
        &self.samples
    }

    /// Reads one sample per line: whitespace-separated decimal floats,
    /// interleaved real/imaginary, `#` starting a comment line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, EstimationError> {
        let mut samples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let floats: Vec<f64> = body
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|source| EstimationError::Parse {
                        line: lineno + 1,
                        source,
                    })
                })
                .collect::<Result<_, _>>()?;
            if floats.len() % 2 != 0 {
                return Err(EstimationError::OddFloatCount {
                    line: lineno + 1,
                    count: floats.len(),
                });
            }
            samples.push(CVector::from_fn(floats.len() / 2, |i, _| {
                Complex64::new(floats[2 * i], floats[2 * i + 1])
            }));
        }
        SampleSet::new(samples)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<(), EstimationError> {
        for s in &self.samples {
            let mut first = true;
            for v in s.iter() {
                if !first {
                    write!(writer, " ")?;
                }
                write!(writer, "{} {}", v.re, v.im)?;
                first = false;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Standard empirical estimates: mean, then outer-product averages of the
/// centered samples for covariance and pseudo-covariance.
pub fn empirical_moments(s: &SampleSet) -> MomentTriple {
    let n = s.dim();
    let count = Complex64::new(s.len() as f64, 0.0);
    let mut mean = CVector::zeros(n);
    for x in s.samples() {
        mean += x;
    }
    mean /= count;
    let mut cov = CMatrix::zeros(n, n);
    let mut pcov = CMatrix::zeros(n, n);
    for x in s.samples() {
        let d = x - &mean;
        cov += &d * d.adjoint();
        pcov += &d * d.transpose();
    }
    cov /= count;
    pcov /= count;
    MomentTriple { mean, cov, pcov }
}

/// Largest sample norm; a lower estimate of the true support radius, so
/// radii computed from it are heuristic rather than certified.
pub fn support_radius(s: &SampleSet) -> f64 {
    s.samples()
        .iter()
        .map(|x| x.norm())
        .fold(0.0f64, f64::max)
}

/// Concentration radii and the minimum sample count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRadii {
    pub r1: f64,
    pub r2: f64,
    pub min_n: usize,
    /// True when the supplied N is below the minimum the bound requires.
    pub below_min_n: bool,
}

/// `r1 = (R/sqrt(N))(2 + sqrt(2 ln(6/delta)))`, `r2 = 2 R r1`, valid from
/// `min_n = ceil((2 + sqrt(2 ln(6/delta)))^2)` samples.
pub fn concentration_radii(r: f64, n: usize, delta: f64) -> Result<ConcentrationRadii, EstimationError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(EstimationError::BadRadius(r));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EstimationError::BadDelta(delta));
    }
    if n == 0 {
        return Err(EstimationError::BadCount);
    }
    let c = 2.0 + (2.0 * (6.0 / delta).ln()).sqrt();
    let r1 = r / (n as f64).sqrt() * c;
    let r2 = 2.0 * r * r / (n as f64).sqrt() * c;
    let min_n = (c * c).ceil() as usize;
    Ok(ConcentrationRadii {
        r1,
        r2,
        min_n,
        below_min_n: n < min_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::moments::validate_moment_triple;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_samples_have_zero_spread() {
        let v = CVector::from_vec(vec![c(1.0, -2.0), c(0.5, 0.25)]);
        let s = SampleSet::new(vec![v.clone(); 5]).unwrap();
        let m = empirical_moments(&s);
        assert_relative_eq!((&m.mean - &v).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(m.cov.norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(m.pcov.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_antipodal_samples() {
        let v = CVector::from_vec(vec![c(1.0, 1.0), c(0.0, -2.0)]);
        let s = SampleSet::new(vec![v.clone(), -&v]).unwrap();
        let m = empirical_moments(&s);
        assert_relative_eq!(m.mean.norm(), 0.0, epsilon = 1e-15);
        let want_cov = &v * v.adjoint();
        let want_pcov = &v * v.transpose();
        assert_relative_eq!((&m.cov - want_cov).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((&m.pcov - want_pcov).norm(), 0.0, epsilon = 1e-12);
        validate_moment_triple(&m).unwrap();
    }

    #[test]
    fn support_radius_cases() {
        let v = CVector::from_vec(vec![c(3.0, 4.0)]);
        let s = SampleSet::new(vec![v]).unwrap();
        assert_relative_eq!(support_radius(&s), 5.0);

        let on_circle: Vec<CVector> = (0..8)
            .map(|k| {
                let th = k as f64 * std::f64::consts::FRAC_PI_4;
                CVector::from_vec(vec![c(th.cos(), th.sin())])
            })
            .collect();
        let s = SampleSet::new(on_circle).unwrap();
        assert_relative_eq!(support_radius(&s), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn radii_frozen_values() {
        // R = 1, N = 10^4, delta = 0.05, evaluated at 30 digits
        let r = concentration_radii(1.0, 10_000, 0.05).unwrap();
        assert_relative_eq!(r.r1, 0.050943470208695, epsilon = 1e-12);
        assert_relative_eq!(r.r2, 0.101886940417390, epsilon = 1e-12);
        assert_eq!(r.min_n, 26);
        assert!(!r.below_min_n);
        assert!(concentration_radii(1.0, 10, 0.05).unwrap().below_min_n);
    }

    #[test]
    fn radii_scale_as_inverse_sqrt_n() {
        let a = concentration_radii(2.0, 1000, 0.1).unwrap();
        let b = concentration_radii(2.0, 4000, 0.1).unwrap();
        assert_relative_eq!(a.r1 / b.r1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(a.r2 / b.r2, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(concentration_radii(0.0, 10, 0.05).is_err());
        assert!(concentration_radii(1.0, 10, 1.5).is_err());
        assert!(concentration_radii(1.0, 0, 0.5).is_err());
        assert!(SampleSet::new(vec![]).is_err());
        let ragged = vec![CVector::zeros(2), CVector::zeros(3)];
        assert!(matches!(
            SampleSet::new(ragged),
            Err(EstimationError::RaggedSample { index: 1, .. })
        ));
    }

    #[test]
    fn sample_file_round_trip() {
        let text = "# two 2-dim samples\n1.0 2.0 -0.5 0.25\n0 1 2 3 # trailing comment\n\n";
        let s = SampleSet::read(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.samples()[0][1], c(-0.5, 0.25));
        assert_eq!(s.samples()[1][0], c(0.0, 1.0));

        let mut out = Vec::new();
        s.write(&mut out).unwrap();
        let s2 = SampleSet::read(out.as_slice()).unwrap();
        for (a, b) in s.samples().iter().zip(s2.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sample_file_rejects_odd_floats() {
        assert!(matches!(
            SampleSet::read("1.0 2.0 3.0\n".as_bytes()),
            Err(EstimationError::OddFloatCount { line: 1, count: 3 })
        ));
    }
}
