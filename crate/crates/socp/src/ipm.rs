//! Homogeneous self-dual interior-point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps, on the embedding
//!
//! ```txt
//!     E'y + G'z + q tau = 0        s = h tau - G x,  s in K
//!     E x - f tau       = 0        kappa = -(q'x + f'y + h'z)
//!     s'z + tau kappa   -> 0
//! ```
//!
//! `tau > 0` at convergence recovers an optimal primal-dual pair; `kappa > 0`
//! yields a Farkas certificate. Dense linear algebra throughout; each Newton
//! step factors the condensed KKT system `[[G'W^-2 G, E'], [E, 0]]` once and
//! reuses it for the predictor, the corrector, and the static tau column.

use nalgebra::{DMatrix, DVector};

use crate::cones::{jordan_div, jordan_mul, max_step, ConeLayout, Scaling};
use crate::problem::{ProblemError, SocpProblem, SocpSolution, Status};

const MAX_ITER: usize = 200;
const STEP_FRACTION: f64 = 0.99;
const STATIC_REG: f64 = 1e-10;

/// Solves `p` to relative tolerance `tol` on residuals and duality gap.
pub fn solve(p: &SocpProblem, tol: f64) -> Result<SocpSolution, ProblemError> {
    if !(1e-12..=1e-3).contains(&tol) {
        return Err(ProblemError::BadTolerance(tol));
    }
    p.validate()?;
    let conic = Conic::build(p)?;
    Ok(run(&conic, tol))
}

struct SparseRow {
    idx: Vec<usize>,
    val: Vec<f64>,
}

struct SocG {
    g: DMatrix<f64>,
    h: DVector<f64>,
    /// Cached `G_k' J G_k`; only the rank-one scaling term changes per iteration.
    gjg: DMatrix<f64>,
}

struct Conic {
    n: usize,
    p: usize,
    q: DVector<f64>,
    e_mat: DMatrix<f64>,
    f: DVector<f64>,
    lp_rows: Vec<SparseRow>,
    lp_h: Vec<f64>,
    socs: Vec<SocG>,
    layout: ConeLayout,
    resx0: f64,
    resy0: f64,
    resz0: f64,
}

impl Conic {
    fn build(p: &SocpProblem) -> Result<Conic, ProblemError> {
        let n = p.nvars;
        let (e_mat, f) = match &p.equalities {
            Some((e, f)) => (e.clone(), f.clone()),
            None => (DMatrix::zeros(0, n), DVector::zeros(0)),
        };

        let mut lp_rows = Vec::new();
        let mut lp_h = Vec::new();
        for &i in &p.nonneg {
            lp_rows.push(SparseRow {
                idx: vec![i],
                val: vec![-1.0],
            });
            lp_h.push(0.0);
        }
        for blk in &p.cone_blocks {
            if blk.a.nrows() == 0 {
                let mut idx = Vec::new();
                let mut val = Vec::new();
                for j in 0..n {
                    if blk.c[j] != 0.0 {
                        idx.push(j);
                        val.push(-blk.c[j]);
                    }
                }
                lp_rows.push(SparseRow { idx, val });
                lp_h.push(blk.d);
            }
        }

        let mut socs = Vec::new();
        for blk in &p.cone_blocks {
            if blk.a.nrows() == 0 {
                continue;
            }
            let d = 1 + blk.a.nrows();
            let mut g = DMatrix::zeros(d, n);
            let mut h = DVector::zeros(d);
            for j in 0..n {
                g[(0, j)] = -blk.c[j];
            }
            h[0] = blk.d;
            for i in 0..blk.a.nrows() {
                for j in 0..n {
                    g[(i + 1, j)] = -blk.a[(i, j)];
                }
                h[i + 1] = blk.b[i];
            }
            let head = g.row(0).transpose();
            let tail = g.rows(1, d - 1);
            let gjg = &head * head.transpose() - tail.transpose() * tail;
            socs.push(SocG { g, h, gjg });
        }

        if lp_rows.is_empty() && socs.is_empty() {
            return Err(ProblemError::Unconstrained);
        }

        let layout = ConeLayout {
            lp: lp_rows.len(),
            socs: socs.iter().map(|s| s.g.nrows()).collect(),
        };
        let mut hnorm2 = lp_h.iter().map(|v| v * v).sum::<f64>();
        for s in &socs {
            hnorm2 += s.h.norm_squared();
        }
        Ok(Conic {
            n,
            p: e_mat.nrows(),
            resx0: 1f64.max(p.objective.norm()),
            resy0: 1f64.max(f.norm()),
            resz0: 1f64.max(hnorm2.sqrt()),
            q: p.objective.clone(),
            e_mat,
            f,
            lp_rows,
            lp_h,
            socs,
            layout,
        })
    }

    fn m(&self) -> usize {
        self.layout.total_dim()
    }

    /// `G x` stacked as [lp rows; soc blocks].
    fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (r, row) in self.lp_rows.iter().enumerate() {
            let mut acc = 0.0;
            for (&j, &v) in row.idx.iter().zip(&row.val) {
                acc += v * x[j];
            }
            out[r] = acc;
        }
        let mut off = self.layout.lp;
        for s in &self.socs {
            let d = s.g.nrows();
            out.rows_mut(off, d).copy_from(&(&s.g * x));
            off += d;
        }
        out
    }

    /// `G' z`.
    fn gt_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (r, row) in self.lp_rows.iter().enumerate() {
            for (&j, &v) in row.idx.iter().zip(&row.val) {
                out[j] += v * z[r];
            }
        }
        let mut off = self.layout.lp;
        for s in &self.socs {
            let d = s.g.nrows();
            out += s.g.transpose() * z.rows(off, d);
            off += d;
        }
        out
    }

    fn h_vec(&self) -> DVector<f64> {
        let mut h = DVector::zeros(self.m());
        for (r, &v) in self.lp_h.iter().enumerate() {
            h[r] = v;
        }
        let mut off = self.layout.lp;
        for s in &self.socs {
            let d = s.g.nrows();
            h.rows_mut(off, d).copy_from(&s.h);
            off += d;
        }
        h
    }

    /// Condensed Hessian `G' W^{-2} G`.
    fn form_h(&self, sc: &Scaling) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for (r, row) in self.lp_rows.iter().enumerate() {
            let w2 = 1.0 / (sc.lp_w[r] * sc.lp_w[r]);
            for (a, (&ja, &va)) in row.idx.iter().zip(&row.val).enumerate() {
                for (&jb, &vb) in row.idx.iter().zip(&row.val).skip(a) {
                    let contrib = w2 * va * vb;
                    h[(ja, jb)] += contrib;
                    if ja != jb {
                        h[(jb, ja)] += contrib;
                    }
                }
            }
        }
        for (k, s) in self.socs.iter().enumerate() {
            let scale = 1.0 / (sc.socs[k].eta * sc.socs[k].eta);
            let wbar = &sc.socs[k].wbar;
            let d = s.g.nrows();
            // u = G_k' J wbar
            let mut jw = wbar.clone();
            for i in 1..d {
                jw[i] = -jw[i];
            }
            let u = s.g.transpose() * jw;
            h.ger(2.0 * scale, &u, &u, 1.0);
            h -= scale * &s.gjg;
        }
        h
    }
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    mat: DMatrix<f64>,
    n: usize,
    p: usize,
}

impl Kkt {
    fn factor(conic: &Conic, h: DMatrix<f64>) -> Kkt {
        let (n, p) = (conic.n, conic.p);
        let mut mat = DMatrix::zeros(n + p, n + p);
        mat.view_mut((0, 0), (n, n)).copy_from(&h);
        if p > 0 {
            mat.view_mut((0, n), (n, p))
                .copy_from(&conic.e_mat.transpose());
            mat.view_mut((n, 0), (p, n)).copy_from(&conic.e_mat);
        }
        // Regularize the factorization only; refinement targets the true
        // matrix, so the regularization does not limit final accuracy.
        let mut reg = mat.clone();
        let scale = 1.0 + (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
        for i in 0..n {
            reg[(i, i)] += STATIC_REG * scale;
        }
        for i in n..n + p {
            reg[(i, i)] -= STATIC_REG * scale;
        }
        Kkt {
            lu: reg.lu(),
            mat,
            n,
            p,
        }
    }

    /// Solves the 2x2 system with two rounds of iterative refinement against
    /// the unregularized matrix.
    fn solve2(&self, rx: &DVector<f64>, ry: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut rhs = DVector::zeros(self.n + self.p);
        rhs.rows_mut(0, self.n).copy_from(rx);
        if self.p > 0 {
            rhs.rows_mut(self.n, self.p).copy_from(ry);
        }
        let mut sol = self.lu.solve(&rhs).unwrap_or_else(|| rhs.clone());
        for _ in 0..2 {
            let resid = &rhs - &self.mat * &sol;
            if let Some(corr) = self.lu.solve(&resid) {
                sol += corr;
            }
        }
        (
            sol.rows(0, self.n).into_owned(),
            sol.rows(self.n, self.p).into_owned(),
        )
    }
}

/// Solves the core system
/// `[0 E' G'; E 0 0; G 0 -W^2] (ux, uy, uz) = (bx, by, bz)`
/// through the condensed factorization, with refinement against the full
/// system: the elimination `uz = W^{-2}(G ux - bz)` amplifies errors in `ux`
/// late in the run, when `W` is nearly singular.
fn core_solve(
    conic: &Conic,
    kkt: &Kkt,
    sc: &Scaling,
    bx: &DVector<f64>,
    by: &DVector<f64>,
    bz: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let raw = |bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>| {
        let w2bz = sc.apply_winv(&sc.apply_winv(bz));
        let rx = bx + conic.gt_mul(&w2bz);
        let (ux, uy) = kkt.solve2(&rx, by);
        let gux = conic.g_mul(&ux);
        let uz = sc.apply_winv(&sc.apply_winv(&(gux - bz)));
        (ux, uy, uz)
    };
    let (mut ux, mut uy, mut uz) = raw(bx, by, bz);
    for _ in 0..4 {
        let r1 = bx - (conic.e_mat.transpose() * &uy + conic.gt_mul(&uz));
        let r2 = by - &conic.e_mat * &ux;
        let r3 = bz - (conic.g_mul(&ux) - sc.apply_w(&sc.apply_w(&uz)));
        let (cx, cy, cz) = raw(&r1, &r2, &r3);
        ux += cx;
        uy += cy;
        uz += cz;
    }
    (ux, uy, uz)
}

struct Metrics {
    pres: f64,
    dres: f64,
    relgap: f64,
    pcost: f64,
    pinf: Option<f64>,
    dinf: Option<f64>,
}

/// Distance of `v` to the cone product (0 when inside).
fn cone_distance(lay: &ConeLayout, v: &DVector<f64>) -> f64 {
    let mut dist: f64 = 0.0;
    for i in 0..lay.lp {
        dist = dist.max(-v[i]);
    }
    let mut off = lay.lp;
    for &d in &lay.socs {
        let mut tail = 0.0;
        for i in 1..d {
            tail += v[off + i] * v[off + i];
        }
        dist = dist.max(tail.sqrt() - v[off]);
        off += d;
    }
    dist.max(0.0)
}

fn run(conic: &Conic, tol: f64) -> SocpSolution {
    let lay = &conic.layout;
    let h = conic.h_vec();
    let e = lay.identity();
    let deg = lay.degree() as f64;

    let mut x = DVector::zeros(conic.n);
    let mut y = DVector::zeros(conic.p);
    let mut s = e.clone();
    let mut z = e.clone();
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut best: Option<(SocpSolution, f64)> = None;
    let mut iterations = 0;
    let mut stalled = 0usize;

    for iter in 0..=MAX_ITER {
        iterations = iter;
        // residuals of the embedding
        let rx = conic.e_mat.transpose() * &y + conic.gt_mul(&z) + &conic.q * tau;
        let ry = &conic.e_mat * &x - &conic.f * tau;
        let rz = conic.g_mul(&x) + &s - &h * tau;
        let rtau = conic.q.dot(&x) + conic.f.dot(&y) + h.dot(&z) + kappa;
        let gap = s.dot(&z);

        let met = metrics(conic, &x, &y, &z, &s, tau);
        if std::env::var_os("SOCP_TRACE").is_some() {
            eprintln!(
                "iter {iter:3} pcost {:+.6e} pres {:.2e} dres {:.2e} relgap {:.2e} tau {:.2e} kappa {:.2e}",
                met.pcost, met.pres, met.dres, met.relgap, tau, kappa
            );
        }
        let score = met.pres.max(met.dres).max(met.relgap);
        let current = |status: Status| SocpSolution {
            x: &x / tau,
            objective_value: met.pcost,
            status,
            primal_residual: met.pres,
            dual_residual: met.dres,
            duality_gap: met.relgap,
            iterations: iter,
            eq_duals: &y / tau,
            cone_duals: &z / tau,
            certificate: None,
        };
        if best.as_ref().map_or(true, |(_, bs)| score < *bs) {
            best = Some((current(Status::MaxIter), score));
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 10 {
                break;
            }
        }

        if met.pres <= tol && met.dres <= tol && met.relgap <= tol {
            return current(Status::Optimal);
        }
        if let Some(pinf) = met.pinf {
            if pinf <= tol {
                let scale = -(conic.f.dot(&y) + h.dot(&z));
                let mut cert = DVector::zeros(conic.p + conic.m());
                cert.rows_mut(0, conic.p).copy_from(&(&y / scale));
                cert.rows_mut(conic.p, conic.m()).copy_from(&(&z / scale));
                let mut sol = current(Status::Infeasible);
                sol.certificate = Some(cert);
                return sol;
            }
        }
        if let Some(dinf) = met.dinf {
            if dinf <= tol {
                let scale = -conic.q.dot(&x);
                let mut sol = current(Status::Unbounded);
                sol.certificate = Some(&x / scale);
                return sol;
            }
        }
        if iter == MAX_ITER {
            break;
        }

        // Nesterov-Todd scaling at the current iterate
        let sc = Scaling::compute(lay, &s, &z);
        let lambda = sc.apply_w(&z);
        let kkt = Kkt::factor(conic, conic.form_h(&sc));
        let mu = (gap + tau * kappa) / (deg + 1.0);

        // static column for the tau elimination
        let (vx, vy, vz) = core_solve(conic, &kkt, &sc, &(-&conic.q), &conic.f, &h);
        let denom = conic.q.dot(&vx) + conic.f.dot(&vy) + h.dot(&vz) - kappa / tau;
        if denom.abs() < 1e-300 || !denom.is_finite() {
            break;
        }

        // Solves the linearized HSD system
        //   E'dy + G'dz + q dtau = bx        E dx - f dtau = by
        //   G dx + ds - h dtau = bz          q'dx + f'dy + h'dz + dkappa = btau
        //   W^{-1}ds + W dz = -d_s           kappa dtau + tau dkappa = -d_tk
        let newton_general = |bx: &DVector<f64>,
                              by: &DVector<f64>,
                              bz: &DVector<f64>,
                              btau: f64,
                              d_s: &DVector<f64>,
                              d_tk: f64| {
            let bz_mod = bz + sc.apply_w(d_s);
            let (ux, uy, uz) = core_solve(conic, &kkt, &sc, bx, by, &bz_mod);
            let num = btau + d_tk / tau - (conic.q.dot(&ux) + conic.f.dot(&uy) + h.dot(&uz));
            let dtau = num / denom;
            let dx = ux + dtau * &vx;
            let dy = uy + dtau * &vy;
            let dz = uz + dtau * &vz;
            let ds = -sc.apply_w(&(d_s + sc.apply_w(&dz)));
            let dkappa = -(d_tk + kappa * dtau) / tau;
            (dx, dy, dz, ds, dtau, dkappa)
        };

        // One refinement pass against the four linear equations: the
        // condensed elimination loses accuracy in dz and dtau once the
        // scaling is extreme, which otherwise stalls the dual residual.
        let newton = |d_s: &DVector<f64>, d_tk: f64, wr: f64| {
            let (bx, by, bz, btau) = (-wr * &rx, -wr * &ry, -wr * &rz, -wr * rtau);
            let (mut dx, mut dy, mut dz, mut ds, mut dtau, mut dkappa) =
                newton_general(&bx, &by, &bz, btau, d_s, d_tk);
            for _ in 0..2 {
                let e1 = &bx
                    - (conic.e_mat.transpose() * &dy + conic.gt_mul(&dz) + &conic.q * dtau);
                let e2 = &by - (&conic.e_mat * &dx - &conic.f * dtau);
                let e3 = &bz - (conic.g_mul(&dx) + &ds - &h * dtau);
                let e4 = btau
                    - (conic.q.dot(&dx) + conic.f.dot(&dy) + h.dot(&dz) + dkappa);
                let err = e1.norm().max(e2.norm()).max(e3.norm()).max(e4.abs());
                if err <= 1e-14 * (1.0 + bx.norm().max(bz.norm())) {
                    break;
                }
                let zero = DVector::zeros(conic.m());
                let (cx, cy, cz, cs, ctau, ckappa) =
                    newton_general(&e1, &e2, &e3, e4, &zero, 0.0);
                dx += cx;
                dy += cy;
                dz += cz;
                ds += cs;
                dtau += ctau;
                dkappa += ckappa;
            }
            (dx, dy, dz, ds, dtau, dkappa)
        };

        // predictor
        let (_, _, dz_a, ds_a, dtau_a, dkappa_a) = newton(&lambda, tau * kappa, 1.0);
        let alpha_a = step_length(lay, &s, &ds_a, &z, &dz_a, tau, dtau_a, kappa, dkappa_a);
        let mu_aff = ((&s + alpha_a * &ds_a).dot(&(&z + alpha_a * &dz_a))
            + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkappa_a))
            / (deg + 1.0);
        let sigma = (mu_aff / mu).max(0.0).min(1.0).powi(3);

        // corrector
        let corr = jordan_mul(lay, &sc.apply_winv(&ds_a), &sc.apply_w(&dz_a));
        let target = jordan_mul(lay, &lambda, &lambda) + corr - sigma * mu * &e;
        let d_s = jordan_div(lay, &lambda, &target);
        let d_tk = tau * kappa + dtau_a * dkappa_a - sigma * mu;
        let (dx, dy, dz, ds, dtau, dkappa) = newton(&d_s, d_tk, 1.0 - sigma);

        let alpha = STEP_FRACTION
            * step_length(lay, &s, &ds, &z, &dz, tau, dtau, kappa, dkappa).min(1.0 / STEP_FRACTION);
        if alpha <= 1e-14 {
            break;
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    let (mut sol, _) = best.expect("at least one iterate evaluated");
    sol.iterations = iterations;
    sol
}

#[allow(clippy::too_many_arguments)]
fn step_length(
    lay: &ConeLayout,
    s: &DVector<f64>,
    ds: &DVector<f64>,
    z: &DVector<f64>,
    dz: &DVector<f64>,
    tau: f64,
    dtau: f64,
    kappa: f64,
    dkappa: f64,
) -> f64 {
    let mut alpha = max_step(lay, s, ds, 1.0);
    alpha = max_step(lay, z, dz, alpha);
    if dtau < 0.0 {
        alpha = alpha.min(-tau / dtau);
    }
    if dkappa < 0.0 {
        alpha = alpha.min(-kappa / dkappa);
    }
    alpha
}

/// Optimality measures are evaluated on the de-homogenized point
/// `(x, y, z) / tau` with the induced slack `h - G x/tau`, matching the
/// definitions used by [`crate::certify`], so a reported Optimal status is
/// reproducible from problem data alone.
#[allow(clippy::too_many_arguments)]
fn metrics(
    conic: &Conic,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    s: &DVector<f64>,
    tau: f64,
) -> Metrics {
    let h = conic.h_vec();
    let xs = x / tau;
    let ys = y / tau;
    let zs = z / tau;
    let pcost = conic.q.dot(&xs);
    let dcost = -(conic.f.dot(&ys) + h.dot(&zs));

    let shat = &h - conic.g_mul(&xs);
    let eq_res = if conic.p > 0 {
        (&conic.e_mat * &xs - &conic.f).norm() / conic.resy0
    } else {
        0.0
    };
    let pres = eq_res.max(cone_distance(&conic.layout, &shat) / conic.resz0);
    let dres = {
        let mut r = conic.q.clone();
        if conic.p > 0 {
            r += conic.e_mat.transpose() * &ys;
        }
        r += conic.gt_mul(&zs);
        r.norm() / conic.resx0
    };
    let relgap = (pcost - dcost).abs() / 1f64.max(pcost.abs().max(dcost.abs()));

    // Farkas measures on the unscaled iterate
    let dual_obj = conic.f.dot(y) + h.dot(z);
    let pinf = if dual_obj < 0.0 {
        let r = conic.e_mat.transpose() * y + conic.gt_mul(z);
        Some(r.norm() / conic.resx0 / (-dual_obj))
    } else {
        None
    };
    let pobj = conic.q.dot(x);
    let dinf = if pobj < 0.0 {
        let rey = (&conic.e_mat * x).norm() / conic.resy0;
        let rgs = (conic.g_mul(x) + s).norm() / conic.resz0;
        Some(rey.max(rgs) / (-pobj))
    } else {
        None
    };

    Metrics {
        pres,
        dres,
        relgap,
        pcost,
        pinf,
        dinf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ConeBlock;
    use approx::assert_relative_eq;

    #[test]
    fn norm_epigraph_reaches_vector_norm() {
        // min t s.t. ||v|| <= t with constant v inside the norm
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let mut p = SocpProblem::new(DVector::from_vec(vec![1.0]));
        p.cone_blocks.push(ConeBlock {
            a: DMatrix::zeros(2, 1),
            b: v,
            c: DVector::from_vec(vec![1.0]),
            d: 0.0,
        });
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_relative_eq!(sol.objective_value, 5.0, epsilon = 1e-7);
    }

    #[test]
    fn scalar_cone_boundary() {
        // min x s.t. |x - 1| <= x  => x* = 0.5
        let mut p = SocpProblem::new(DVector::from_vec(vec![1.0]));
        p.cone_blocks.push(ConeBlock {
            a: DMatrix::from_vec(1, 1, vec![1.0]),
            b: DVector::from_vec(vec![-1.0]),
            c: DVector::from_vec(vec![1.0]),
            d: 0.0,
        });
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-7);
    }

    #[test]
    fn lp_with_equalities() {
        // min x0 + x1 s.t. x0 + x1 + x2 = 1, x >= 0  => optimum 0
        let mut p = SocpProblem::new(DVector::from_vec(vec![1.0, 1.0, 0.0]));
        p.equalities = Some((
            DMatrix::from_vec(1, 3, vec![1.0, 1.0, 1.0]),
            DVector::from_vec(vec![1.0]),
        ));
        p.nonneg = vec![0, 1, 2];
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_relative_eq!(sol.objective_value, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn detects_infeasible() {
        // x >= 1 (linear block), x <= -1, via nonneg slack encoding
        let mut p = SocpProblem::new(DVector::from_vec(vec![1.0]));
        p.cone_blocks
            .push(ConeBlock::linear(DVector::from_vec(vec![1.0]), -1.0));
        p.cone_blocks
            .push(ConeBlock::linear(DVector::from_vec(vec![-1.0]), -1.0));
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        assert!(sol.certificate.is_some());
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x >= 0
        let mut p = SocpProblem::new(DVector::from_vec(vec![-1.0]));
        p.nonneg = vec![0];
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Unbounded);
        assert!(sol.certificate.is_some());
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = SocpProblem::new(DVector::from_vec(vec![1.0]));
        assert!(matches!(
            solve(&p, 1e-2),
            Err(ProblemError::BadTolerance(_))
        ));
    }
}
