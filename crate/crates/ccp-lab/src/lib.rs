//! Experiment pipelines for the chance-constrained toolkit: out-of-sample
//! validation, violation tables, bound-gap and estimation-uncertainty
//! studies, and the robust MVDR beamforming sweep. Every pipeline is
//! deterministic given its config (all randomness flows from explicit
//! seeds) and emits CSV with a config hash in the header.

pub mod beamforming;
pub mod csv;
pub mod experiments;
pub mod instances;
pub mod validate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Reform(#[from] ccp_core::ambiguity::ReformError),
    #[error(transparent)]
    Dist(#[from] ccp_core::dist::DistError),
    #[error(transparent)]
    Estimation(#[from] ccp_core::estimation::EstimationError),
    #[error(transparent)]
    Validation(#[from] validate::ValidationError),
    #[error(transparent)]
    Solver(#[from] socp::ProblemError),
    #[error(transparent)]
    Copula(#[from] ccp_core::copula::CopulaError),
    #[error(transparent)]
    Beamforming(#[from] beamforming::BeamformingError),
    #[error("{what} ended with status {status}")]
    SolveFailed {
        what: &'static str,
        status: &'static str,
    },
}
