use thiserror::Error;

/// Errors raised by the finite element and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("constraint on dof {dof} lies outside the displacement block")]
    InvalidConstraint { dof: usize },

    #[error("singular matrix (achieved relative residual {achieved_residual:e})")]
    SingularMatrix { achieved_residual: f64 },

    #[error("linear solve did not converge (relative residual {achieved_residual:e}, tolerance {tolerance:e})")]
    LinearSolveNotConverged { achieved_residual: f64, tolerance: f64 },

    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge (residual {residual:e})")]
    EigenSolverFailed { residual: f64 },

    #[error("potential gaps increase at iteration {index}")]
    NonMonotoneGaps { index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
