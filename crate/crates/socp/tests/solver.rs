//! Regression suite: random bounded SOCPs with certified optima, backend
//! agreement, and scale invariance of the argmin.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use socp::{
    backend_by_name, certify, residuals, solve, ConeBlock, SocpProblem, Status,
};

/// Random SOCP with a known strictly feasible point and a norm ball keeping
/// it bounded.
fn random_socp(rng: &mut ChaCha8Rng, n: usize, blocks: usize) -> SocpProblem {
    let obj = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
    let mut p = SocpProblem::new(obj);
    for _ in 0..blocks {
        let rows = rng.gen_range(1..=n);
        let a = DMatrix::from_fn(rows, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DVector::from_fn(rows, |_, _| rng.gen_range(-0.5..0.5));
        let c = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
        let margin = rng.gen_range(0.1..1.0);
        let d = (&a * &x0 + &b).norm() - c.dot(&x0) + margin;
        p.cone_blocks.push(ConeBlock { a, b, c, d });
    }
    // ||x|| <= 10 keeps the problem bounded
    p.cone_blocks.push(ConeBlock {
        a: DMatrix::identity(n, n),
        b: DVector::zeros(n),
        c: DVector::zeros(n),
        d: 10.0,
    });
    p
}

#[test]
fn regression_set_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = 1e-8;
    let mut optimal = 0;
    for case in 0..20 {
        let n = rng.gen_range(2..12);
        let blocks = rng.gen_range(1..5);
        let p = random_socp(&mut rng, n, blocks);
        let sol = solve(&p, tol).unwrap();
        assert_eq!(sol.status, Status::Optimal, "case {case} not optimal");
        optimal += 1;

        // reported residuals must be reproducible from problem data alone
        let cert = certify(&p, &sol).unwrap();
        assert!(
            cert.primal_residual <= 1e-7,
            "case {case}: primal residual {}",
            cert.primal_residual
        );
        assert!(
            cert.dual_residual <= 1e-7,
            "case {case}: dual residual {}",
            cert.dual_residual
        );
        assert!(
            cert.duality_gap <= 1e-7,
            "case {case}: duality gap {}",
            cert.duality_gap
        );
        assert!(
            (cert.primal_residual - sol.primal_residual).abs() <= 1e-9
                && (cert.dual_residual - sol.dual_residual).abs() <= 1e-9,
            "case {case}: recomputed residuals disagree with reported ones"
        );

        let point = residuals(&p, &sol.x).unwrap();
        assert!(point.max_cone_violation <= 1e-7);
    }
    assert_eq!(optimal, 20);
}

#[test]
fn backend_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let tol = 1e-8;
    let clarabel = backend_by_name("clarabel").unwrap();
    let reference = backend_by_name("reference").unwrap();
    for _ in 0..10 {
        let n = rng.gen_range(2..10);
        let p = random_socp(&mut rng, n, 3);
        let a = reference.solve(&p, tol).unwrap();
        let b = clarabel.solve(&p, tol).unwrap();
        assert_eq!(a.status, Status::Optimal);
        assert_eq!(b.status, Status::Optimal);
        let scale = 1f64.max(a.objective_value.abs());
        assert!(
            (a.objective_value - b.objective_value).abs() <= 10.0 * tol * scale,
            "objectives disagree: {} vs {}",
            a.objective_value,
            b.objective_value
        );
    }
}

#[test]
fn objective_scaling_leaves_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_socp(&mut rng, 6, 3);
    let mut p10 = p.clone();
    p10.objective *= 10.0;
    let tol = 1e-8;
    let a = solve(&p, tol).unwrap();
    let b = solve(&p10, tol).unwrap();
    assert_eq!(a.status, Status::Optimal);
    assert_eq!(b.status, Status::Optimal);
    assert!(
        (&a.x - &b.x).norm() <= 1e-5 * (1.0 + a.x.norm()),
        "argmin moved by {}",
        (&a.x - &b.x).norm()
    );
}

#[test]
fn unknown_backend_is_none() {
    assert!(backend_by_name("nonexistent").is_none());
}
