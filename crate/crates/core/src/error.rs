use thiserror::Error;

/// Errors raised while constructing or validating problem data.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A vector or matrix had the wrong size for the operation.
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Two pieces of problem data disagree (e.g. basis and grid domain length).
    #[error("configuration error: {0}")]
    Config(String),

    /// A NaN or infinity showed up where only finite values are meaningful.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
