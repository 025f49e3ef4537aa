use oclab_core::CoreError;
use oclab_solvers::SolverError;
use thiserror::Error;

/// Errors raised while sampling fields or generating datasets.
#[derive(Debug, Error)]
pub enum StochasticError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Solver(#[from] SolverError),

    /// Covariance factorization failed even after jitter escalation.
    #[error("covariance Cholesky failed after {attempts} jitter escalations")]
    CovarianceFactorization { attempts: usize },

    /// A trajectory kept failing after the allowed resampling attempts.
    #[error("trajectory {index} failed after {attempts} resampling attempts: {last}")]
    ResamplingExhausted {
        index: usize,
        attempts: usize,
        last: String,
    },

    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed dataset: {0}")]
    Format(String),

    #[error("json failure: {0}")]
    Json(#[from] serde_json::Error),
}
