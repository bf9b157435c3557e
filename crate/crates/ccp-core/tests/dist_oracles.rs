//! Quantile checks against an independent oracle: adaptive Simpson
//! quadrature of the closed-form densities, inverted by bisection. The
//! oracle never touches the library's CDF/quantile code paths.

use ccp_core::dist::{marginal_pdf, marginal_quantile, CesFamily};

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64, fm: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson(f, a, m, fa, fm, flm, eps / 2.0, depth - 1)
            + simpson(f, m, b, fm, fb, frm, eps / 2.0, depth - 1)
    }
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    simpson(&f, a, b, f(a), f(b), f(m), 1e-13, 40)
}

/// CDF by symmetry + quadrature from 0 (all reference densities are even).
fn oracle_cdf(pdf: impl Fn(f64) -> f64 + Copy, x: f64) -> f64 {
    if x >= 0.0 {
        0.5 + integrate(pdf, 0.0, x)
    } else {
        0.5 - integrate(pdf, x, 0.0)
    }
}

fn oracle_quantile(pdf: impl Fn(f64) -> f64 + Copy, p: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while oracle_cdf(pdf, lo) > p {
        lo *= 2.0;
    }
    while oracle_cdf(pdf, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if oracle_cdf(pdf, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// reference densities written out independently of the library
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn student_t_pdf(nu: f64) -> impl Fn(f64) -> f64 + Copy {
    // Gamma((nu+1)/2) / (sqrt(nu pi) Gamma(nu/2)) via ln-gamma (Lanczos)
    fn ln_gamma(x: f64) -> f64 {
        let g = 7.0;
        let coef = [
            0.999_999_999_999_809_93,
            676.520_368_121_885_1,
            -1259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if x < 0.5 {
            let pi = std::f64::consts::PI;
            pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
        } else {
            let x = x - 1.0;
            let mut a = coef[0];
            let t = x + g + 0.5;
            for (i, &cv) in coef.iter().enumerate().skip(1) {
                a += cv / (x + i as f64);
            }
            0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
        }
    }
    move |x: f64| {
        let c = (ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI).ln())
        .exp();
        c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
    }
}

fn laplace_pdf(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

fn logistic_pdf(x: f64) -> f64 {
    let e = (-x).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn cauchy_pdf(x: f64) -> f64 {
    1.0 / (std::f64::consts::PI * (1.0 + x * x))
}

#[test]
fn gaussian_quantiles_match_quadrature_oracle() {
    for p in [0.1, 0.25, 0.5, 0.7, 0.9, 0.95, 0.975, 0.999] {
        let got = marginal_quantile(CesFamily::Gaussian, p).unwrap();
        let want = oracle_quantile(normal_pdf, p);
        assert!((got - want).abs() <= 1e-9, "p = {p}: {got} vs oracle {want}");
    }
}

#[test]
fn student_t_quantiles_match_quadrature_oracle() {
    for nu in [1.0, 2.0, 4.0, 7.5] {
        let pdf = student_t_pdf(nu);
        for p in [0.2, 0.5, 0.8, 0.95, 0.99] {
            let got = marginal_quantile(CesFamily::StudentT { nu }, p).unwrap();
            let want = oracle_quantile(pdf, p);
            assert!(
                (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                "nu = {nu}, p = {p}: {got} vs oracle {want}"
            );
        }
    }
}

#[test]
fn closed_form_quantiles_match_quadrature_oracle() {
    for p in [0.05, 0.3, 0.6, 0.9, 0.99] {
        let got = marginal_quantile(CesFamily::Laplace, p).unwrap();
        let want = oracle_quantile(laplace_pdf, p);
        assert!((got - want).abs() <= 1e-9, "laplace p = {p}");
        let got = marginal_quantile(CesFamily::Logistic, p).unwrap();
        let want = oracle_quantile(logistic_pdf, p);
        assert!((got - want).abs() <= 1e-9, "logistic p = {p}");
        let got = marginal_quantile(CesFamily::Cauchy, p).unwrap();
        let want = oracle_quantile(cauchy_pdf, p);
        assert!((got - want).abs() <= 1e-9, "cauchy p = {p}");
    }
}

#[test]
fn library_pdfs_match_reference_densities() {
    for x in [-3.0, -0.7, 0.0, 0.4, 2.5] {
        assert!((marginal_pdf(CesFamily::Gaussian, x).unwrap() - normal_pdf(x)).abs() < 1e-12);
        assert!((marginal_pdf(CesFamily::Laplace, x).unwrap() - laplace_pdf(x)).abs() < 1e-12);
        assert!((marginal_pdf(CesFamily::Logistic, x).unwrap() - logistic_pdf(x)).abs() < 1e-12);
        assert!((marginal_pdf(CesFamily::Cauchy, x).unwrap() - cauchy_pdf(x)).abs() < 1e-12);
        let t = student_t_pdf(4.0);
        assert!(
            (marginal_pdf(CesFamily::StudentT { nu: 4.0 }, x).unwrap() - t(x)).abs() < 1e-10
        );
    }
}
