//! Cone arithmetic for the interior-point solver: Jordan products,
//! Nesterov-Todd scalings, and maximum step lengths over a product of the
//! nonnegative orthant and second-order cones.

use nalgebra::DVector;

/// Dimensions of the cone product: `lp` nonnegative coordinates followed by
/// second-order cones of the listed sizes (head included).
#[derive(Debug, Clone)]
pub struct ConeLayout {
    pub lp: usize,
    pub socs: Vec<usize>,
}

impl ConeLayout {
    pub fn total_dim(&self) -> usize {
        self.lp + self.socs.iter().sum::<usize>()
    }

    /// Barrier degree: one per nonnegative coordinate, one per cone.
    pub fn degree(&self) -> usize {
        self.lp + self.socs.len()
    }

    /// Identity element of the Jordan algebra.
    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.total_dim());
        for i in 0..self.lp {
            e[i] = 1.0;
        }
        let mut off = self.lp;
        for &d in &self.socs {
            e[off] = 1.0;
            off += d;
        }
        e
    }
}

/// Jordan product `u o v`.
pub fn jordan_mul(lay: &ConeLayout, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut w = DVector::zeros(lay.total_dim());
    for i in 0..lay.lp {
        w[i] = u[i] * v[i];
    }
    let mut off = lay.lp;
    for &d in &lay.socs {
        let (u0, v0) = (u[off], v[off]);
        let mut dot = u0 * v0;
        for i in 1..d {
            dot += u[off + i] * v[off + i];
        }
        w[off] = dot;
        for i in 1..d {
            w[off + i] = u0 * v[off + i] + v0 * u[off + i];
        }
        off += d;
    }
    w
}

/// Solves `lambda o x = r` for `x`; `lambda` must be in the interior.
pub fn jordan_div(lay: &ConeLayout, lambda: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(lay.total_dim());
    for i in 0..lay.lp {
        x[i] = r[i] / lambda[i];
    }
    let mut off = lay.lp;
    for &d in &lay.socs {
        let l0 = lambda[off];
        let mut l1_norm2 = 0.0;
        let mut l1_dot_r1 = 0.0;
        for i in 1..d {
            l1_norm2 += lambda[off + i] * lambda[off + i];
            l1_dot_r1 += lambda[off + i] * r[off + i];
        }
        let det = l0 * l0 - l1_norm2;
        let x0 = (l0 * r[off] - l1_dot_r1) / det;
        x[off] = x0;
        for i in 1..d {
            x[off + i] = (r[off + i] - x0 * lambda[off + i]) / l0;
        }
        off += d;
    }
    x
}

/// Largest `alpha` such that `u + alpha du` stays in the cone, capped at
/// `cap`. `u` must be strictly interior.
pub fn max_step(lay: &ConeLayout, u: &DVector<f64>, du: &DVector<f64>, cap: f64) -> f64 {
    let mut alpha = cap;
    for i in 0..lay.lp {
        if du[i] < 0.0 {
            alpha = alpha.min(-u[i] / du[i]);
        }
    }
    let mut off = lay.lp;
    for &d in &lay.socs {
        alpha = alpha.min(soc_max_step(
            u.rows(off, d).into_owned(),
            du.rows(off, d).into_owned(),
            cap,
        ));
        off += d;
    }
    alpha.max(0.0)
}

fn soc_max_step(u: DVector<f64>, du: DVector<f64>, cap: f64) -> f64 {
    // Boundary of feasibility of g(a) = (u0+a*du0)^2 - ||u1+a*du1||^2 with
    // the head kept positive. g(0) > 0 by interiority.
    let d = u.len();
    let mut u1du1 = 0.0;
    let mut du1n2 = 0.0;
    let mut u1n2 = 0.0;
    for i in 1..d {
        u1du1 += u[i] * du[i];
        du1n2 += du[i] * du[i];
        u1n2 += u[i] * u[i];
    }
    let a2 = du[0] * du[0] - du1n2;
    let a1 = 2.0 * (u[0] * du[0] - u1du1);
    let a0 = u[0] * u[0] - u1n2;

    let mut alpha = cap;
    // head positivity
    if du[0] < 0.0 {
        alpha = alpha.min(-u[0] / du[0]);
    }
    // smallest positive root of a2 t^2 + a1 t + a0 = 0
    let root = smallest_positive_root(a2, a1, a0);
    if let Some(t) = root {
        alpha = alpha.min(t);
    }
    alpha
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Some(0.0);
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return None;
    }
    let (a, b, c) = (a / scale, b / scale, c / scale);
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return None;
        }
        let t = -c / b;
        return (t > 0.0).then_some(t);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [q / a, if q.abs() > 0.0 { c / q } else { f64::INFINITY }];
    roots.sort_by(f64::total_cmp);
    roots.into_iter().find(|&t| t > 0.0 && t.is_finite())
}

/// Nesterov-Todd scaling for the product cone: `W z = W^{-1} s = lambda`.
#[derive(Debug, Clone)]
pub struct Scaling {
    /// Per-coordinate scaling `w_i = sqrt(s_i / z_i)` on the orthant.
    pub lp_w: DVector<f64>,
    pub socs: Vec<SocScaling>,
    layout: ConeLayout,
}

/// Second-order block: `W = eta * V(wbar)` with `V(w)^2 = 2 w w' - J` and
/// `wbar' J wbar = 1`.
#[derive(Debug, Clone)]
pub struct SocScaling {
    pub eta: f64,
    pub wbar: DVector<f64>,
}

impl Scaling {
    pub fn compute(lay: &ConeLayout, s: &DVector<f64>, z: &DVector<f64>) -> Scaling {
        let mut lp_w = DVector::zeros(lay.lp);
        for i in 0..lay.lp {
            lp_w[i] = (s[i] / z[i]).sqrt();
        }
        let mut socs = Vec::with_capacity(lay.socs.len());
        let mut off = lay.lp;
        for &d in &lay.socs {
            let sb = s.rows(off, d).into_owned();
            let zb = z.rows(off, d).into_owned();
            let rs = hyperbolic_norm(&sb);
            let rz = hyperbolic_norm(&zb);
            let sbar = &sb / rs;
            let zbar = &zb / rz;
            let gamma = ((1.0 + sbar.dot(&zbar)) / 2.0).sqrt();
            let mut wbar = DVector::zeros(d);
            wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
            for i in 1..d {
                wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
            }
            socs.push(SocScaling {
                eta: (rs / rz).sqrt(),
                wbar,
            });
            off += d;
        }
        Scaling {
            lp_w,
            socs,
            layout: lay.clone(),
        }
    }

    pub fn apply_w(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, false)
    }

    pub fn apply_winv(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, true)
    }

    fn apply(&self, v: &DVector<f64>, inverse: bool) -> DVector<f64> {
        let lay = &self.layout;
        let mut out = DVector::zeros(lay.total_dim());
        for i in 0..lay.lp {
            out[i] = if inverse {
                v[i] / self.lp_w[i]
            } else {
                v[i] * self.lp_w[i]
            };
        }
        let mut off = lay.lp;
        for (k, &d) in lay.socs.iter().enumerate() {
            let sc = &self.socs[k];
            let vb = v.rows(off, d).into_owned();
            // V(wbar) v, with J wbar substituted for the inverse
            let mut w = sc.wbar.clone();
            if inverse {
                for i in 1..d {
                    w[i] = -w[i];
                }
            }
            let mut w1v1 = 0.0;
            for i in 1..d {
                w1v1 += w[i] * vb[i];
            }
            let head = w[0] * vb[0] + w1v1;
            let coef = vb[0] + w1v1 / (1.0 + w[0]);
            let scale = if inverse { 1.0 / sc.eta } else { sc.eta };
            out[off] = scale * head;
            for i in 1..d {
                out[off + i] = scale * (vb[i] + coef * w[i]);
            }
            off += d;
        }
        out
    }
}

fn hyperbolic_norm(v: &DVector<f64>) -> f64 {
    let mut tail = 0.0;
    for i in 1..v.len() {
        tail += v[i] * v[i];
    }
    (v[0] * v[0] - tail).max(1e-300).sqrt()
}
