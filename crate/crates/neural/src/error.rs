//! Error type for model construction, training, and checkpointing.

use thiserror::Error;

/// Errors surfaced by the neural components.
#[derive(Debug, Error)]
pub enum NeuralError {
    /// Propagated from the shared problem-definition layer.
    #[error(transparent)]
    Core(#[from] oclab_core::CoreError),

    /// Propagated from the reference solvers used for probes and data.
    #[error(transparent)]
    Solver(#[from] oclab_solvers::SolverError),

    /// Invalid architecture or training configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A loss or gradient stopped being finite; the context names the
    /// learning rate and batch so the run can be diagnosed and re-tuned.
    #[error(
        "non-finite loss at epoch {epoch}, batch {batch} (lr {lr:.3e}, batch size {batch_size}); \
         lower the learning rate or shrink the batch"
    )]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        lr: f64,
        batch_size: usize,
    },

    /// The penalized objective grew past the divergence guard.
    #[error("training diverged at epoch {epoch}: loss {loss:.3e} exceeds {limit:.1e}")]
    Diverged { epoch: usize, loss: f64, limit: f64 },

    /// A constraint-violation measure came in negative, which the
    /// multiplier update must reject to stay monotone.
    #[error("negative violation measure {value:.3e} for constraint group {group}")]
    NegativeViolation { group: usize, value: f64 },

    /// A checkpoint file failed validation.
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Metadata (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
