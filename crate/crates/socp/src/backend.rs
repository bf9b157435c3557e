//! Pluggable solver backends. The reference backend is the built-in
//! interior-point method; the Clarabel backend wraps the `clarabel` crate and
//! is mainly used to cross-check the reference implementation.

use nalgebra::DVector;

use crate::ipm;
use crate::problem::{conic_order, ProblemError, SocpProblem, SocpSolution, Status};

pub trait SocpBackend {
    fn name(&self) -> &'static str;
    fn solve(&self, p: &SocpProblem, tol: f64) -> Result<SocpSolution, ProblemError>;
}

/// Built-in interior-point solver.
pub struct ReferenceBackend;

impl SocpBackend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn solve(&self, p: &SocpProblem, tol: f64) -> Result<SocpSolution, ProblemError> {
        ipm::solve(p, tol)
    }
}

/// Wrapper around the Clarabel conic solver.
pub struct ClarabelBackend;

impl SocpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, p: &SocpProblem, tol: f64) -> Result<SocpSolution, ProblemError> {
        if !(1e-12..=1e-3).contains(&tol) {
            return Err(ProblemError::BadTolerance(tol));
        }
        p.validate()?;
        solve_clarabel(p, tol)
    }
}

pub fn backend_by_name(name: &str) -> Option<Box<dyn SocpBackend>> {
    match name {
        "reference" => Some(Box::new(ReferenceBackend)),
        "clarabel" => Some(Box::new(ClarabelBackend)),
        _ => None,
    }
}

fn solve_clarabel(p: &SocpProblem, tol: f64) -> Result<SocpSolution, ProblemError> {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{
        DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
    };

    let n = p.nvars;
    let (g, h) = crate::problem::conic_matrices(p);
    let (e_mat, f) = match &p.equalities {
        Some((e, f)) => (e.clone(), f.clone()),
        None => (nalgebra::DMatrix::zeros(0, n), DVector::zeros(0)),
    };
    let neq = e_mat.nrows();
    let m = g.nrows();

    // rows: equalities (zero cone) first, then the conic rows
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0usize);
    for j in 0..n {
        for i in 0..neq {
            let v = e_mat[(i, j)];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        for i in 0..m {
            let v = g[(i, j)];
            if v != 0.0 {
                rowval.push(neq + i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(neq + m, n, colptr, rowval, nzval);
    let mut b = vec![0.0; neq + m];
    for i in 0..neq {
        b[i] = f[i];
    }
    for i in 0..m {
        b[neq + i] = h[i];
    }

    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if neq > 0 {
        cones.push(SupportedConeT::ZeroConeT(neq));
    }
    let dims = conic_order(p);
    let lp: usize = dims.iter().filter(|&&d| d == 1).count();
    if lp > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(lp));
    }
    for &d in dims.iter().filter(|&&d| d > 1) {
        cones.push(SupportedConeT::SecondOrderConeT(d));
    }

    let quad = CscMatrix::zeros((n, n));
    let q: Vec<f64> = p.objective.iter().copied().collect();
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .build()
        .map_err(|_| ProblemError::BadTolerance(tol))?;
    let mut solver = DefaultSolver::new(&quad, &q, &a, &b, &cones, settings)
        .map_err(|_| ProblemError::Unconstrained)?;
    solver.solve();

    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Status::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Status::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Status::Unbounded,
        _ => Status::MaxIter,
    };
    let x = DVector::from_vec(sol.x.clone());
    let z_all = DVector::from_vec(sol.z.clone());
    Ok(SocpSolution {
        objective_value: p.objective.dot(&x),
        x,
        status,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        duality_gap: f64::NAN,
        iterations: 0,
        eq_duals: z_all.rows(0, neq).into_owned(),
        cone_duals: z_all.rows(neq, m).into_owned(),
        certificate: None,
    })
}
