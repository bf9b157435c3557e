//! Dense second-order cone programming.
//!
//! Problems are described in a simple standard form (linear objective, cone
//! blocks `||Ax + b|| <= c'x + d`, equality constraints, nonnegative
//! variables) and solved by a homogeneous self-dual interior-point method
//! with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//! Candidate solutions can be certified independently of the solver through
//! [`residuals`] and [`certify`].
//!
//! Not aimed at sparse large-scale work: all linear algebra is dense and the
//! intended problems have at most a few thousand variables.

mod backend;
mod cones;
mod ipm;
mod problem;

pub use backend::{backend_by_name, ClarabelBackend, ReferenceBackend, SocpBackend};
pub use ipm::solve;
pub use problem::{
    certify, conic_matrices, conic_order, residuals, Certificate, ConeBlock, PointResiduals,
    ProblemError, SocpProblem, SocpSolution, Status,
};
