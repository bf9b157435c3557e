//! Moment algebra against Monte Carlo and direct-evaluation oracles, plus
//! the quadratic-form identities as property tests.

use ccp_core::dist::{sample_complex, CesFamily, SeededStream};
use ccp_core::moments::{
    augmented_covariance, constraint_stats, objective_stats, stack_re_im, validate_moment_triple,
    CMatrix, CVector, ConstraintRow, MomentTriple,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Any real PSD 2n x 2n matrix determines a valid (cov, pcov) pair through
/// the block identities; this inverts the augmented map.
fn triple_from_real_psd(k: &DMatrix<f64>, n: usize) -> (CMatrix, CMatrix) {
    let xx = k.view((0, 0), (n, n));
    let xy = k.view((0, n), (n, n));
    let yx = k.view((n, 0), (n, n));
    let yy = k.view((n, n), (n, n));
    let cov = CMatrix::from_fn(n, n, |r, cc| {
        c(xx[(r, cc)] + yy[(r, cc)], yx[(r, cc)] - xy[(r, cc)])
    });
    let pcov = CMatrix::from_fn(n, n, |r, cc| {
        c(xx[(r, cc)] - yy[(r, cc)], yx[(r, cc)] + xy[(r, cc)])
    });
    (cov, pcov)
}

fn random_triple(rng: &mut ChaCha8Rng, n: usize) -> MomentTriple {
    let f = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let k = &f * f.transpose();
    let (cov, pcov) = triple_from_real_psd(&k, n);
    let mean = CVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let t = MomentTriple { mean, cov, pcov };
    validate_moment_triple(&t).expect("construction yields a valid triple");
    t
}

fn random_z(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
}

/// (z^T cov z̄ + Re(z^T pcov z)) / 2, evaluated directly in complex
/// arithmetic. This is the variance of Re(a z) from the stacking proof; the
/// Hermitian term carries the conjugate on the right (z^T Γ z̄ = z^H Γ̄ z),
/// which coincides with z^H Γ z only when Γ is real.
fn constraint_quad_direct(t: &MomentTriple, z: &CVector) -> f64 {
    let zbar = z.map(|v| v.conj());
    let herm = (z.transpose() * &t.cov * &zbar)[(0, 0)].re;
    let sym = (z.transpose() * &t.pcov * z)[(0, 0)].re;
    (herm + sym) / 2.0
}

/// (z^H cov z + Re(z^H pcov conj(z))) / 2.
fn objective_quad_direct(t: &MomentTriple, z: &CVector) -> f64 {
    let herm = (z.adjoint() * &t.cov * z)[(0, 0)].re;
    let zbar = z.map(|v| v.conj());
    let sym = (z.adjoint() * &t.pcov * zbar)[(0, 0)].re;
    (herm + sym) / 2.0
}

#[test]
fn quadratic_form_identity_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(1..4);
        let t = random_triple(&mut rng, n);
        let k = augmented_covariance(&t.cov, &t.pcov);
        let q = t.constraint_matrix();
        for _ in 0..10 {
            let z = random_z(&mut rng, n);
            let w = stack_re_im(&z);
            // constraint form: flipped stacking on K equals Q on [Re; Im]
            let mut wf = w.clone();
            for i in n..2 * n {
                wf[i] = -wf[i];
            }
            let via_flip = (wf.transpose() * &k * &wf)[(0, 0)];
            let via_q = (w.transpose() * &q * &w)[(0, 0)];
            let direct = constraint_quad_direct(&t, &z);
            let scale = 1.0 + direct.abs();
            assert!((via_flip - direct).abs() <= 1e-10 * scale);
            assert!((via_q - direct).abs() <= 1e-10 * scale);
            // objective form: plain stacking
            let via_k = (w.transpose() * &k * &w)[(0, 0)];
            let obj = objective_quad_direct(&t, &z);
            assert!((via_k - obj).abs() <= 1e-10 * (1.0 + obj.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variances_nonnegative_for_valid_triples(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..4);
        let t = random_triple(&mut rng, n);
        let z = random_z(&mut rng, n);
        let s = objective_stats(&t, &z).unwrap();
        prop_assert!(s.variance >= 0.0);
        let row = ConstraintRow::new(t, 0.3, 0.2).unwrap();
        let s = constraint_stats(&row, &z).unwrap();
        prop_assert!(s.variance >= row.b_var);
    }

    #[test]
    fn proper_triple_has_balanced_blocks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..4);
        let f = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let cov = &f * f.adjoint();
        let k = augmented_covariance(&cov, &CMatrix::zeros(n, n));
        for r in 0..n {
            for cc in 0..n {
                prop_assert!((k[(r, cc)] - k[(n + r, n + cc)]).abs() <= 1e-12);
                prop_assert!((k[(r, cc)] - cov[(r, cc)].re / 2.0).abs() <= 1e-12);
            }
        }
    }
}

fn empirical_triple(samples: &[CVector]) -> MomentTriple {
    let n = samples[0].len();
    let count = samples.len() as f64;
    let mut mean = CVector::zeros(n);
    for s in samples {
        mean += s;
    }
    mean /= c(count, 0.0);
    let mut cov = CMatrix::zeros(n, n);
    let mut pcov = CMatrix::zeros(n, n);
    for s in samples {
        let d = s - &mean;
        cov += &d * d.adjoint();
        pcov += &d * d.transpose();
    }
    cov /= c(count, 0.0);
    pcov /= c(count, 0.0);
    MomentTriple { mean, cov, pcov }
}

#[test]
fn objective_stats_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    let t = random_triple(&mut rng, 2);
    let z = random_z(&mut rng, 2);
    let stats = objective_stats(&t, &z).unwrap();

    let draws = sample_complex(CesFamily::Gaussian, &t, 1_000_000, SeededStream::new(5, 0)).unwrap();
    let vals: Vec<f64> = draws
        .iter()
        .map(|cv| (cv.adjoint() * &z)[(0, 0)].re)
        .collect();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
    assert!(
        (v - stats.variance).abs() <= 0.01 * stats.variance,
        "variance {v} vs predicted {}",
        stats.variance
    );
    assert!((m - stats.mean).abs() <= 0.01 * (1.0 + stats.mean.abs()));
}

#[test]
fn constraint_stats_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3002);
    let t = random_triple(&mut rng, 2);
    let row = ConstraintRow::new(t, 0.8, 0.25).unwrap();
    let z = random_z(&mut rng, 2);
    let stats = constraint_stats(&row, &z).unwrap();

    let a_draws = sample_complex(CesFamily::Gaussian, &row.a, 1_000_000, SeededStream::new(6, 0)).unwrap();
    let mut rng_b = SeededStream::new(6, 1).rng();
    let vals: Vec<f64> = a_draws
        .iter()
        .map(|av| {
            let b = row.b_mean + row.b_var.sqrt() * rng_b.sample::<f64, _>(StandardNormal);
            (av.transpose() * &z)[(0, 0)].re - b
        })
        .collect();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
    assert!(
        (v - stats.variance).abs() <= 0.01 * stats.variance,
        "variance {v} vs predicted {}",
        stats.variance
    );
    assert!((m - stats.mean).abs() <= 0.01 * (1.0 + stats.mean.abs()));
}

#[test]
fn gaussian_proper_scalar_splits_variance() {
    let t = MomentTriple::proper(CVector::zeros(1), CMatrix::identity(1, 1)).unwrap();
    let draws = sample_complex(CesFamily::Gaussian, &t, 1_000_000, SeededStream::new(9, 0)).unwrap();
    let (mut vre, mut vim) = (0.0, 0.0);
    for d in &draws {
        vre += d[0].re * d[0].re;
        vim += d[0].im * d[0].im;
    }
    vre /= draws.len() as f64;
    vim /= draws.len() as f64;
    assert!((vre - 0.5).abs() <= 0.01, "Var(Re) = {vre}");
    assert!((vim - 0.5).abs() <= 0.01, "Var(Im) = {vim}");
}

#[test]
fn sampler_moments_match_target_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for family in [
        CesFamily::Gaussian,
        CesFamily::StudentT { nu: 4.0 },
        CesFamily::Laplace,
        CesFamily::Logistic,
    ] {
        let t = random_triple(&mut rng, 3);
        let draws = sample_complex(family, &t, 1_000_000, SeededStream::new(31, 2)).unwrap();
        let emp = empirical_triple(&draws);
        let dcov = (&emp.cov - &t.cov).norm() / t.cov.norm();
        let dpcov = (&emp.pcov - &t.pcov).norm() / t.cov.norm();
        assert!(dcov <= 0.02, "{}: cov error {dcov}", family.label());
        assert!(dpcov <= 0.02, "{}: pcov error {dpcov}", family.label());
    }
}

#[test]
fn affine_closure_of_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3004);
    let t = random_triple(&mut rng, 3);
    let a = CMatrix::from_fn(2, 3, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let b = CVector::from_fn(2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));

    let transformed = MomentTriple {
        mean: &a * &t.mean + &b,
        cov: &a * &t.cov * a.adjoint(),
        pcov: &a * &t.pcov * a.transpose(),
    };
    let draws = sample_complex(CesFamily::Gaussian, &t, 500_000, SeededStream::new(13, 0)).unwrap();
    let mapped: Vec<CVector> = draws.iter().map(|x| &a * x + &b).collect();
    let emp = empirical_triple(&mapped);
    assert!((&emp.mean - &transformed.mean).norm() <= 0.02 * (1.0 + transformed.mean.norm()));
    assert!((&emp.cov - &transformed.cov).norm() <= 0.02 * transformed.cov.norm());
    assert!((&emp.pcov - &transformed.pcov).norm() <= 0.03 * transformed.cov.norm());
}

#[test]
fn stacked_row_moments_embed_b_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3005);
    let t = random_triple(&mut rng, 2);
    let row = ConstraintRow::new(t, 1.5, 0.36).unwrap();
    let d = row.stacked_moments();
    assert_eq!(d.dim(), 3);
    assert_eq!(d.mean[2], c(1.5, 0.0));
    assert_eq!(d.cov[(2, 2)], c(0.36, 0.0));
    assert_eq!(d.pcov[(2, 2)], c(0.36, 0.0));
    validate_moment_triple(&d).unwrap();

    // Re(d [z; -1]) has the same stats as the row formulas
    let z = random_z(&mut rng, 2);
    let stats = constraint_stats(&row, &z).unwrap();
    let mut zt = CVector::zeros(3);
    zt.rows_mut(0, 2).copy_from(&z);
    zt[2] = c(-1.0, 0.0);
    let mean_d: f64 = d
        .mean
        .iter()
        .zip(zt.iter())
        .map(|(m, v)| (m * v).re)
        .sum();
    let w = stack_re_im(&zt);
    let var_d = (w.transpose() * d.constraint_matrix() * &w)[(0, 0)];
    assert!((mean_d - stats.mean).abs() <= 1e-12 * (1.0 + stats.mean.abs()));
    assert!((var_d - stats.variance).abs() <= 1e-10 * (1.0 + stats.variance));
}

#[test]
fn heavy_tail_scatter_matches_cauchy_and_t1() {
    // identical streams, identical code path: Cauchy must equal StudentT(1)
    let t = MomentTriple::proper(CVector::zeros(2), CMatrix::identity(2, 2)).unwrap();
    let a = sample_complex(CesFamily::Cauchy, &t, 50, SeededStream::new(4, 4)).unwrap();
    let b = sample_complex(CesFamily::StudentT { nu: 1.0 }, &t, 50, SeededStream::new(4, 4)).unwrap();
    for (va, vb) in a.iter().zip(&b) {
        for (xa, xb) in va.iter().zip(vb.iter()) {
            assert!((xa - xb).norm() <= 1e-12 * (1.0 + xa.norm()));
        }
    }
}

fn _type_check(v: DVector<f64>) -> usize {
    v.len()
}
