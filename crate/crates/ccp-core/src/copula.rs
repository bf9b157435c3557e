//! Gumbel copula machinery for joint chance constraints.
//!
//! A joint level `p` splits across `m` constraints through positive weights
//! `y` on the simplex: constraint `i` gets the individual level
//! `p_i = p^(y_i^(1/theta))`, and the copula recomposes the `p_i` exactly
//! to `p`. The safety factor then becomes a convex decreasing curve
//! `k_p(y)` in the weight, one closed form per uncertainty model, which the
//! joint SOCP approximates from below by tangents and from above by chords.

use thiserror::Error;

use crate::ambiguity::AmbiguitySpec;
use crate::dist::{marginal_pdf, marginal_quantile, CesFamily, DistError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CopulaError {
    #[error("copula parameter theta = {0} must be >= 1")]
    BadTheta(f64),
    #[error("copula argument {0} outside (0, 1]")]
    BadArgument(f64),
    #[error("joint probability {0} outside (0, 1)")]
    BadLevel(f64),
    #[error("weights must be positive and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("weight {0} outside (0, 1]")]
    BadWeight(f64),
    #[error("level {p} outside the row's p-range {range}")]
    BadRange { p: f64, range: &'static str },
    #[error("tangent/interpolation points must be strictly increasing in (0, 1]")]
    BadPoints,
    #[error("interpolation needs at least 2 points")]
    TooFewPoints,
    #[error(transparent)]
    Dist(#[from] DistError),
}

fn check_theta(theta: f64) -> Result<(), CopulaError> {
    if theta >= 1.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(CopulaError::BadTheta(theta))
    }
}

/// `C_theta(u) = exp(-(sum (-ln u_i)^theta)^(1/theta))`; the independence
/// product at `theta = 1`, exactly.
pub fn gumbel_copula(u: &[f64], theta: f64) -> Result<f64, CopulaError> {
    check_theta(theta)?;
    for &ui in u {
        if !(ui > 0.0 && ui <= 1.0) {
            return Err(CopulaError::BadArgument(ui));
        }
    }
    if theta == 1.0 {
        return Ok(u.iter().product());
    }
    let s: f64 = u.iter().map(|&ui| (-ui.ln()).powf(theta)).sum();
    Ok((-s.powf(1.0 / theta)).exp())
}

/// Per-constraint levels `p_i = p^(y_i^(1/theta))` for simplex weights `y`.
pub fn split_joint_level(p: f64, weights: &[f64], theta: f64) -> Result<Vec<f64>, CopulaError> {
    check_theta(theta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(CopulaError::BadLevel(p));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&y| y <= 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(CopulaError::BadWeights(sum));
    }
    Ok(weights
        .iter()
        .map(|&y| (y.powf(1.0 / theta) * p.ln()).exp())
        .collect())
}

/// Row of the safety-curve table: which closed form `k_p(y)` follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KpCase {
    Ces(CesFamily),
    MomentBased,
    Symmetric,
    NormBound,
    DataDriven,
}

impl KpCase {
    /// The curve row used by each ambiguity model. The covariance-bound and
    /// mean-ellipsoid models reuse the moment-based row: their extra terms
    /// do not depend on the copula weight.
    pub fn from_spec(spec: &AmbiguitySpec) -> KpCase {
        match spec {
            AmbiguitySpec::CesKnown(f) => KpCase::Ces(*f),
            AmbiguitySpec::MomentExact
            | AmbiguitySpec::CovBounded { .. }
            | AmbiguitySpec::MomentsEllipsoid { .. } => KpCase::MomentBased,
            AmbiguitySpec::MomentSymmetric => KpCase::Symmetric,
            AmbiguitySpec::NormSupport { .. } => KpCase::NormBound,
            AmbiguitySpec::DataDriven { .. } => KpCase::DataDriven,
        }
    }

    pub fn p_range(&self) -> &'static str {
        match self {
            KpCase::Ces(_) | KpCase::Symmetric => "[0.5, 1)",
            _ => "(0, 1)",
        }
    }

    pub fn check_level(&self, p: f64) -> Result<(), CopulaError> {
        let ok = match self {
            KpCase::Ces(_) | KpCase::Symmetric => (0.5..1.0).contains(&p),
            _ => p > 0.0 && p < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CopulaError::BadRange {
                p,
                range: self.p_range(),
            })
        }
    }
}

fn check_weight(y: f64) -> Result<(), CopulaError> {
    if y > 0.0 && y <= 1.0 {
        Ok(())
    } else {
        Err(CopulaError::BadWeight(y))
    }
}

/// `k_p(y)`: the safety factor at the weighted level `p^(y^(1/theta))`.
pub fn safety_curve(case: KpCase, p: f64, theta: f64, y: f64) -> Result<f64, CopulaError> {
    check_theta(theta)?;
    case.check_level(p)?;
    check_weight(y)?;
    let py = (y.powf(1.0 / theta) * p.ln()).exp();
    Ok(match case {
        KpCase::Ces(f) => marginal_quantile(f, py)?,
        KpCase::MomentBased | KpCase::DataDriven => (py / (1.0 - py)).sqrt(),
        KpCase::Symmetric => 1.0 / (2.0 * (1.0 - py)).sqrt(),
        KpCase::NormBound => (-2.0 * (1.0 - py).ln()).sqrt(),
    })
}

/// `d k_p(y) / dy`, closed form (chain rule through `p_y`).
pub fn safety_curve_slope(case: KpCase, p: f64, theta: f64, y: f64) -> Result<f64, CopulaError> {
    check_theta(theta)?;
    case.check_level(p)?;
    check_weight(y)?;
    let py = (y.powf(1.0 / theta) * p.ln()).exp();
    let dpy_dy = py * p.ln() * y.powf(1.0 / theta - 1.0) / theta;
    let dk_dpy = match case {
        KpCase::Ces(f) => {
            let k = marginal_quantile(f, py)?;
            1.0 / marginal_pdf(f, k)?
        }
        KpCase::MomentBased | KpCase::DataDriven => {
            let k = (py / (1.0 - py)).sqrt();
            1.0 / (2.0 * k * (1.0 - py) * (1.0 - py))
        }
        KpCase::Symmetric => 1.0 / (2.0f64.powf(1.5) * (1.0 - py).powf(1.5)),
        KpCase::NormBound => {
            let k = (-2.0 * (1.0 - py).ln()).sqrt();
            1.0 / (k * (1.0 - py))
        }
    };
    Ok(dk_dpy * dpy_dy)
}

/// Affine pieces `(alpha, beta)` whose pointwise maximum under- or
/// over-estimates `k_p(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceCoeffs {
    pub pieces: Vec<(f64, f64)>,
}

impl PieceCoeffs {
    pub fn eval_max(&self, y: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(a, b)| a + b * y)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_points(points: &[f64]) -> Result<(), CopulaError> {
    if points.is_empty() {
        return Err(CopulaError::BadPoints);
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CopulaError::BadPoints);
    }
    if points[0] <= 0.0 || *points.last().unwrap() > 1.0 {
        return Err(CopulaError::BadPoints);
    }
    Ok(())
}

/// Tangent lines at the given points: a global minorant of the convex
/// `k_p(y)` on (0, 1].
pub fn tangent_underestimator(
    case: KpCase,
    p: f64,
    theta: f64,
    points: &[f64],
) -> Result<PieceCoeffs, CopulaError> {
    check_points(points)?;
    let mut pieces = Vec::with_capacity(points.len());
    for &t in points {
        let k = safety_curve(case, p, theta, t)?;
        let beta = safety_curve_slope(case, p, theta, t)?;
        pieces.push((k - beta * t, beta));
    }
    Ok(PieceCoeffs { pieces })
}

/// Chords between consecutive points: a majorant of `k_p(y)` on
/// `[t_1, t_N]`.
pub fn interpolation_overestimator(
    case: KpCase,
    p: f64,
    theta: f64,
    points: &[f64],
) -> Result<PieceCoeffs, CopulaError> {
    check_points(points)?;
    if points.len() < 2 {
        return Err(CopulaError::TooFewPoints);
    }
    let values: Vec<f64> = points
        .iter()
        .map(|&t| safety_curve(case, p, theta, t))
        .collect::<Result<_, _>>()?;
    let mut pieces = Vec::with_capacity(points.len() - 1);
    for l in 0..points.len() - 1 {
        let (t0, t1) = (points[l], points[l + 1]);
        let (k0, k1) = (values[l], values[l + 1]);
        let beta = (k1 - k0) / (t1 - t0);
        let alpha = (t1 * k0 - t0 * k1) / (t1 - t0);
        pieces.push((alpha, beta));
    }
    Ok(PieceCoeffs { pieces })
}

/// Log-spaced points on [1e-3, 1]: `k_p(y)` steepens sharply as `y -> 0`,
/// so uniform spacing wastes pieces where the curve is flat.
pub fn geometric_points(count: usize) -> Vec<f64> {
    assert!(count >= 2, "need at least two points");
    let lo = 1e-3f64.ln();
    (0..count)
        .map(|i| (lo * (1.0 - i as f64 / (count - 1) as f64)).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn independence_copula_is_product() {
        let v = gumbel_copula(&[0.9, 0.8], 1.0).unwrap();
        assert_eq!(v, 0.9 * 0.8);
    }

    #[test]
    fn equal_arguments_collapse_algebraically() {
        // C(u,...,u) = u^(m^(1/theta))
        for (m, theta, u) in [(3usize, 2.0, 0.7), (5, 1.5, 0.9), (2, 4.0, 0.4)] {
            let v = gumbel_copula(&vec![u; m], theta).unwrap();
            let want = u.powf((m as f64).powf(1.0 / theta));
            assert_relative_eq!(v, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn frozen_value_theta_two() {
        // exp(-sqrt(ln^2 0.9 + ln^2 0.8)), evaluated at 30 digits
        let v = gumbel_copula(&[0.9, 0.8], 2.0).unwrap();
        assert_relative_eq!(v, 0.781322830602361, epsilon = 1e-14);
    }

    #[test]
    fn copula_rejects_zero_and_above_one() {
        assert!(matches!(
            gumbel_copula(&[0.0, 0.5], 2.0),
            Err(CopulaError::BadArgument(_))
        ));
        assert!(gumbel_copula(&[1.1], 2.0).is_err());
        assert!(gumbel_copula(&[0.5], 0.5).is_err());
        assert!(gumbel_copula(&[1.0, 0.5], 2.0).is_ok());
    }

    #[test]
    fn split_two_equal_weights_independence() {
        let ps = split_joint_level(0.81, &[0.5, 0.5], 1.0).unwrap();
        assert_relative_eq!(ps[0], 0.9, epsilon = 1e-12);
        assert_relative_eq!(ps[1], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn split_three_equal_weights_theta_two() {
        let ps = split_joint_level(0.9, &[1.0 / 3.0; 3], 2.0).unwrap();
        for &pi in &ps {
            assert_relative_eq!(pi, 0.940983266646671, epsilon = 1e-12);
        }
        let back = gumbel_copula(&ps, 2.0).unwrap();
        assert_relative_eq!(back, 0.9, epsilon = 1e-12);
    }

    #[test]
    fn split_degenerate_weight_carries_the_level() {
        let eps = 1e-9;
        let ps = split_joint_level(0.8, &[1.0 - eps, eps], 2.0).unwrap();
        assert!((ps[0] - 0.8).abs() < 1e-8);
        assert!(ps[1] > 0.999);
    }

    #[test]
    fn recomposition_over_random_cases() {
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for theta in [1.0, 2.0, 5.0] {
            for _ in 0..40 {
                let m = 2 + (next() * 6.0) as usize;
                let mut w: Vec<f64> = (0..m).map(|_| next() + 1e-3).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                let p = 0.5 + 0.49 * next();
                let ps = split_joint_level(p, &w, theta).unwrap();
                let back = gumbel_copula(&ps, theta).unwrap();
                assert!((back - p).abs() <= 1e-12, "theta {theta}, p {p}: {back}");
            }
        }
    }

    #[test]
    fn curve_at_full_weight_is_the_individual_factor() {
        for p in [0.6, 0.75, 0.95] {
            let k = safety_curve(KpCase::MomentBased, p, 3.0, 1.0).unwrap();
            assert_relative_eq!(k, (p / (1.0 - p)).sqrt(), epsilon = 1e-13);
        }
    }

    #[test]
    fn ces_gaussian_curve_frozen_value() {
        // p = 0.9, theta = 2, y = 0.25: quantile at 0.9^0.5
        let k = safety_curve(KpCase::Ces(CesFamily::Gaussian), 0.9, 2.0, 0.25).unwrap();
        assert_relative_eq!(k, 1.632218789616866, epsilon = 1e-9);
    }

    #[test]
    fn slopes_match_central_differences() {
        let cases = [
            KpCase::Ces(CesFamily::Gaussian),
            KpCase::Ces(CesFamily::StudentT { nu: 4.0 }),
            KpCase::MomentBased,
            KpCase::Symmetric,
            KpCase::NormBound,
            KpCase::DataDriven,
        ];
        for case in cases {
            for (p, theta, y) in [(0.7, 2.0, 0.3), (0.9, 1.0, 0.8), (0.95, 5.0, 0.05)] {
                let h = 1e-6 * y;
                let fd = (safety_curve(case, p, theta, y + h).unwrap()
                    - safety_curve(case, p, theta, y - h).unwrap())
                    / (2.0 * h);
                let an = safety_curve_slope(case, p, theta, y).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-6 * an.abs().max(1.0),
                    "{case:?} at ({p},{theta},{y}): fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn curves_are_decreasing_and_midpoint_convex() {
        let cases = [
            KpCase::Ces(CesFamily::Gaussian),
            KpCase::Ces(CesFamily::Laplace),
            KpCase::Ces(CesFamily::Cauchy),
            KpCase::MomentBased,
            KpCase::Symmetric,
            KpCase::NormBound,
        ];
        for case in cases {
            let p = match case {
                KpCase::Ces(_) | KpCase::Symmetric => 0.8,
                _ => 0.35,
            };
            for theta in [1.0, 2.0, 5.0] {
                let mut y = 0.02;
                while y < 0.98 {
                    let k0 = safety_curve(case, p, theta, y).unwrap();
                    let k1 = safety_curve(case, p, theta, y + 0.01).unwrap();
                    assert!(k1 < k0, "{case:?} not decreasing at y = {y}");
                    let mid = safety_curve(case, p, theta, y + 0.005).unwrap();
                    assert!(
                        mid <= (k0 + k1) / 2.0 + 1e-12,
                        "{case:?} not midpoint convex at y = {y}"
                    );
                    y += 0.01;
                }
            }
        }
    }

    #[test]
    fn single_tangent_at_one() {
        let pc = tangent_underestimator(KpCase::MomentBased, 0.9, 2.0, &[1.0]).unwrap();
        assert_eq!(pc.pieces.len(), 1);
        let k1 = safety_curve(KpCase::MomentBased, 0.9, 2.0, 1.0).unwrap();
        let s1 = safety_curve_slope(KpCase::MomentBased, 0.9, 2.0, 1.0).unwrap();
        assert_relative_eq!(pc.eval_max(1.0), k1, epsilon = 1e-12);
        assert_relative_eq!(pc.pieces[0].1, s1, epsilon = 1e-12);
    }

    #[test]
    fn under_and_over_estimators_sandwich_the_curve() {
        let points = geometric_points(20);
        let lo = tangent_underestimator(KpCase::MomentBased, 0.95, 2.0, &points).unwrap();
        let hi = interpolation_overestimator(KpCase::MomentBased, 0.95, 2.0, &points).unwrap();
        for i in 0..1000 {
            let y = 1e-3 + (1.0 - 1e-3) * (i as f64) / 999.0;
            let k = safety_curve(KpCase::MomentBased, 0.95, 2.0, y).unwrap();
            assert!(lo.eval_max(y) <= k + 1e-12 * k.abs(), "under at y = {y}");
            assert!(hi.eval_max(y) >= k - 1e-12 * k.abs(), "over at y = {y}");
        }
    }

    #[test]
    fn nested_tangent_sets_only_improve() {
        let coarse = geometric_points(20);
        let mut fine = coarse.clone();
        for w in coarse.windows(2) {
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.sort_by(f64::total_cmp);
        let lo_c = tangent_underestimator(KpCase::MomentBased, 0.95, 2.0, &coarse).unwrap();
        let lo_f = tangent_underestimator(KpCase::MomentBased, 0.95, 2.0, &fine).unwrap();
        for i in 0..500 {
            let y = 1e-3 + (1.0 - 1e-3) * (i as f64) / 499.0;
            assert!(lo_f.eval_max(y) >= lo_c.eval_max(y) - 1e-12);
        }
    }

    #[test]
    fn geometric_points_span_the_interval() {
        let pts = geometric_points(5);
        assert_relative_eq!(pts[0], 1e-3, epsilon = 1e-15);
        assert_relative_eq!(pts[4], 1.0, epsilon = 1e-15);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }
}
