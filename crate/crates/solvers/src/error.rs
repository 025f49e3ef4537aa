use oclab_core::CoreError;
use thiserror::Error;

/// Errors raised by the forward simulators.
#[derive(Debug, Error)]
pub enum SolverError {
    /// Invalid problem data (dimensions, non-finite values, configuration).
    #[error(transparent)]
    Core(#[from] CoreError),

    /// The implicit step's Newton iteration did not reach tolerance.
    #[error("Newton did not converge within {iters} iterations (last residual {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    /// A linear solve or factorization broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File input/output failed.
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),

    /// A data file had an unexpected layout.
    #[error("malformed file: {0}")]
    Format(String),
}
