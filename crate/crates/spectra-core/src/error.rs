use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("SVD did not converge within {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("matrix is rank deficient (sigma_min/sigma_max = {0:.3e})")]
    RankDeficient(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("Newton-Schulz iterate diverged (norm {0:.3e})")]
    DivergedIteration(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("gradient is zero")]
    ZeroGradient,

    #[error("step index {k} out of range (total {total})")]
    OutOfRange { k: usize, total: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
