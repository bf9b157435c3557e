//! Standard-form problem description and certification helpers.
//!
//! A problem is
//!
//! ```txt
//!     min  objective' x
//!     s.t. ||A_k x + b_k|| <= c_k' x + d_k    for every cone block k
//!          E x = f
//!          x_i >= 0                           for i in nonneg
//! ```
//!
//! A cone block whose `a` has zero rows encodes the linear inequality
//! `c' x + d >= 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem must have at least one variable")]
    NoVariables,
    #[error("cone block {block}: {what} has {got} columns, expected {expected}")]
    BadConeDims {
        block: usize,
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("cone block {block}: b has {got} rows but A has {rows}")]
    BadConeRhs { block: usize, got: usize, rows: usize },
    #[error("equality constraints: E is {rows}x{cols}, f has {flen}, nvars = {nvars}")]
    BadEqualities {
        rows: usize,
        cols: usize,
        flen: usize,
        nvars: usize,
    },
    #[error("nonnegative index {idx} out of range (nvars = {nvars})")]
    BadNonnegIndex { idx: usize, nvars: usize },
    #[error("objective has {got} entries, expected {expected}")]
    BadObjective { got: usize, expected: usize },
    #[error("problem has no cone, nonnegativity, or equality constraints")]
    Unconstrained,
    #[error("tolerance {0} outside supported range [1e-12, 1e-3]")]
    BadTolerance(f64),
    #[error("vector has {got} entries, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// One second-order cone constraint `||A x + b|| <= c' x + d`.
#[derive(Debug, Clone)]
pub struct ConeBlock {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl ConeBlock {
    /// Linear inequality `c' x + d >= 0` as a degenerate cone block.
    pub fn linear(c: DVector<f64>, d: f64) -> Self {
        let n = c.len();
        ConeBlock {
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            c,
            d,
        }
    }

    /// `c' x + d - ||A x + b||`; nonnegative iff `x` satisfies the block.
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        let affine = self.c.dot(x) + self.d;
        if self.a.nrows() == 0 {
            affine
        } else {
            affine - (&self.a * x + &self.b).norm()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SocpProblem {
    pub nvars: usize,
    pub objective: DVector<f64>,
    pub cone_blocks: Vec<ConeBlock>,
    /// Equality constraints `E x = f`, if any.
    pub equalities: Option<(DMatrix<f64>, DVector<f64>)>,
    /// Indices of variables constrained to be nonnegative.
    pub nonneg: Vec<usize>,
}

impl SocpProblem {
    pub fn new(objective: DVector<f64>) -> Self {
        SocpProblem {
            nvars: objective.len(),
            objective,
            cone_blocks: Vec::new(),
            equalities: None,
            nonneg: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.nvars == 0 {
            return Err(ProblemError::NoVariables);
        }
        if self.objective.len() != self.nvars {
            return Err(ProblemError::BadObjective {
                got: self.objective.len(),
                expected: self.nvars,
            });
        }
        for (k, blk) in self.cone_blocks.iter().enumerate() {
            if blk.a.nrows() > 0 && blk.a.ncols() != self.nvars {
                return Err(ProblemError::BadConeDims {
                    block: k,
                    what: "A",
                    got: blk.a.ncols(),
                    expected: self.nvars,
                });
            }
            if blk.c.len() != self.nvars {
                return Err(ProblemError::BadConeDims {
                    block: k,
                    what: "c",
                    got: blk.c.len(),
                    expected: self.nvars,
                });
            }
            if blk.b.len() != blk.a.nrows() {
                return Err(ProblemError::BadConeRhs {
                    block: k,
                    got: blk.b.len(),
                    rows: blk.a.nrows(),
                });
            }
        }
        if let Some((e, f)) = &self.equalities {
            if e.ncols() != self.nvars || e.nrows() != f.len() {
                return Err(ProblemError::BadEqualities {
                    rows: e.nrows(),
                    cols: e.ncols(),
                    flen: f.len(),
                    nvars: self.nvars,
                });
            }
        }
        for &i in &self.nonneg {
            if i >= self.nvars {
                return Err(ProblemError::BadNonnegIndex {
                    idx: i,
                    nvars: self.nvars,
                });
            }
        }
        if self.cone_blocks.is_empty() && self.nonneg.is_empty() && self.equalities.is_none() {
            return Err(ProblemError::Unconstrained);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SocpSolution {
    pub x: DVector<f64>,
    pub objective_value: f64,
    pub status: Status,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    /// Multipliers for the equality constraints.
    pub eq_duals: DVector<f64>,
    /// Cone multipliers, stacked in the order produced by [`conic_order`]:
    /// nonnegative variables, then linear blocks, then second-order blocks.
    pub cone_duals: DVector<f64>,
    /// Farkas-type ray backing an Infeasible/Unbounded status.
    pub certificate: Option<DVector<f64>>,
}

/// Primal feasibility measures of a candidate point, recomputed from problem
/// data alone.
#[derive(Debug, Clone, Copy)]
pub struct PointResiduals {
    pub eq_residual: f64,
    /// Largest violation over cone blocks and nonnegativity constraints.
    pub max_cone_violation: f64,
    pub objective_value: f64,
}

/// Evaluates a candidate `x` against the constraints of `p`.
pub fn residuals(p: &SocpProblem, x: &DVector<f64>) -> Result<PointResiduals, ProblemError> {
    if x.len() != p.nvars {
        return Err(ProblemError::DimensionMismatch {
            got: x.len(),
            expected: p.nvars,
        });
    }
    let eq_residual = match &p.equalities {
        Some((e, f)) => (e * x - f).amax(),
        None => 0.0,
    };
    let mut viol: f64 = 0.0;
    for blk in &p.cone_blocks {
        viol = viol.max(-blk.margin(x));
    }
    for &i in &p.nonneg {
        viol = viol.max(-x[i]);
    }
    Ok(PointResiduals {
        eq_residual,
        max_cone_violation: viol.max(0.0),
        objective_value: p.objective.dot(x),
    })
}

/// Residuals of a reported solution, recomputed from `(x, y, z)` and the
/// problem data. Used by tests to certify Optimal statuses independently of
/// the solver's internal bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

pub fn certify(p: &SocpProblem, sol: &SocpSolution) -> Result<Certificate, ProblemError> {
    let (g, h) = conic_matrices(p);
    let (e, f) = match &p.equalities {
        Some((e, f)) => (e.clone(), f.clone()),
        None => (DMatrix::zeros(0, p.nvars), DVector::zeros(0)),
    };
    if sol.cone_duals.len() != g.nrows() || sol.eq_duals.len() != e.nrows() {
        return Err(ProblemError::DimensionMismatch {
            got: sol.cone_duals.len(),
            expected: g.nrows(),
        });
    }
    let x = &sol.x;
    let z = &sol.cone_duals;
    let y = &sol.eq_duals;
    let s = &h - &g * x;

    let resz0 = 1f64.max(h.norm());
    let resy0 = 1f64.max(f.norm());
    let resx0 = 1f64.max(p.objective.norm());

    let mut pres = if e.nrows() > 0 {
        (&e * x - &f).norm() / resy0
    } else {
        0.0
    };
    // distance of s to the cone, block by block
    let mut idx = 0;
    let mut cone_dist: f64 = 0.0;
    for dim in conic_order(p) {
        if dim == 1 {
            cone_dist = cone_dist.max(-s[idx]);
        } else {
            let head = s[idx];
            let tail = s.rows(idx + 1, dim - 1).norm();
            cone_dist = cone_dist.max(tail - head);
        }
        idx += dim;
    }
    pres = pres.max(cone_dist.max(0.0) / resz0);

    let dual_res = {
        let mut r = p.objective.clone();
        if e.nrows() > 0 {
            r += e.transpose() * y;
        }
        r += g.transpose() * z;
        r.norm() / resx0
    };

    let pcost = p.objective.dot(x);
    let dcost = -(f.dot(y) + h.dot(z));
    let gap = (pcost - dcost).abs() / 1f64.max(pcost.abs().max(dcost.abs()));

    Ok(Certificate {
        primal_residual: pres,
        dual_residual: dual_res,
        duality_gap: gap,
    })
}

/// Cone dimensions in the order used for `cone_duals`: one entry of `1` per
/// nonnegative variable and per linear block, then `1 + rows(A_k)` per
/// second-order block.
pub fn conic_order(p: &SocpProblem) -> Vec<usize> {
    let mut dims = Vec::new();
    for _ in &p.nonneg {
        dims.push(1);
    }
    for blk in &p.cone_blocks {
        if blk.a.nrows() == 0 {
            dims.push(1);
        }
    }
    for blk in &p.cone_blocks {
        if blk.a.nrows() > 0 {
            dims.push(1 + blk.a.nrows());
        }
    }
    dims
}

/// Dense `(G, h)` with `s = h - G x` stacked in [`conic_order`].
pub fn conic_matrices(p: &SocpProblem) -> (DMatrix<f64>, DVector<f64>) {
    let m: usize = conic_order(p).iter().sum();
    let mut g = DMatrix::zeros(m, p.nvars);
    let mut h = DVector::zeros(m);
    let mut r = 0;
    for &i in &p.nonneg {
        g[(r, i)] = -1.0;
        r += 1;
    }
    for blk in &p.cone_blocks {
        if blk.a.nrows() == 0 {
            for j in 0..p.nvars {
                g[(r, j)] = -blk.c[j];
            }
            h[r] = blk.d;
            r += 1;
        }
    }
    for blk in &p.cone_blocks {
        if blk.a.nrows() == 0 {
            continue;
        }
        for j in 0..p.nvars {
            g[(r, j)] = -blk.c[j];
        }
        h[r] = blk.d;
        r += 1;
        for i in 0..blk.a.nrows() {
            for j in 0..p.nvars {
                g[(r, j)] = -blk.a[(i, j)];
            }
            h[r] = blk.b[i];
            r += 1;
        }
    }
    (g, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball_problem() -> SocpProblem {
        // min -x0 s.t. ||x|| <= 1
        let mut p = SocpProblem::new(DVector::from_vec(vec![-1.0, 0.0]));
        p.cone_blocks.push(ConeBlock {
            a: DMatrix::identity(2, 2),
            b: DVector::zeros(2),
            c: DVector::zeros(2),
            d: 1.0,
        });
        p
    }

    #[test]
    fn interior_point_has_zero_violation() {
        let p = unit_ball_problem();
        let r = residuals(&p, &DVector::from_vec(vec![0.1, 0.2])).unwrap();
        assert_eq!(r.max_cone_violation, 0.0);
        assert_eq!(r.eq_residual, 0.0);
    }

    #[test]
    fn exterior_point_reports_violation() {
        let p = unit_ball_problem();
        let r = residuals(&p, &DVector::from_vec(vec![1.1, 0.0])).unwrap();
        assert!((r.max_cone_violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = unit_ball_problem();
        assert!(residuals(&p, &DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn validate_catches_bad_shapes() {
        let mut p = unit_ball_problem();
        p.nonneg.push(7);
        assert!(matches!(
            p.validate(),
            Err(ProblemError::BadNonnegIndex { .. })
        ));
    }
}
