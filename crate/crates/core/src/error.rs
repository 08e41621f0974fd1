use alloc::string::String;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not positive definite (Cholesky pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// The dual variable left the half-line on which the dual objective or a
    /// resolvent is defined. Dual solvers treat this as a barrier.
    #[error("gamma = {gamma:e} is outside the admissible domain (gamma > {lower:e})")]
    OutOfDomain { gamma: f64, lower: f64 },

    #[error("degenerate Gram matrix even after jitter (min eigenvalue {min_eigenvalue:e})")]
    DegenerateGram { min_eigenvalue: f64 },

    #[error("degenerate weights: the total weight is zero")]
    DegenerateWeights,

    #[error("rank-deficient normal matrix (min eigenvalue {min_eigenvalue:e}); a ridge term is required")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
