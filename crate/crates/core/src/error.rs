use thiserror::Error;

/// Errors surfaced by the solvers and statistics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coordinates coincide where a formula divides by their difference.
    #[error("singular configuration: {0}")]
    Singular(String),

    /// The adaptive stepper exhausted its halving budget.
    #[error("step failed at s = {s} after {halvings} halvings (min gap {min_gap:.3e})")]
    StepFailure {
        s: f64,
        halvings: u32,
        min_gap: f64,
        state: Vec<f64>,
    },

    /// Group reprojection did not converge.
    #[error("reprojection failure: {0}")]
    Reprojection(String),

    /// A quantity that is exact on the matrix group was violated beyond tolerance.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// The matrix integrator left the group beyond the hard defect ceiling.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
}

pub type Result<T> = core::result::Result<T, Error>;
