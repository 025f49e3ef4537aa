use thiserror::Error;

/// Errors raised by the optimizers.
#[derive(Debug, Error)]
pub enum OptimError {
    /// The objective returned NaN or infinity; for finite-difference
    /// gradients the perturbed coordinate is named.
    #[error("non-finite objective value{}", match .coordinate {
        Some(j) => format!(" while perturbing coordinate {j}"),
        None => String::new(),
    })]
    NonFinite { coordinate: Option<usize> },

    /// Invalid problem data (dimensions, bounds, indefinite matrices).
    #[error("configuration error: {0}")]
    Config(String),

    /// An iteration failed numerically (breakdown, divergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Writing an optimizer trace failed.
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}
