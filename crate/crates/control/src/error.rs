use oclab_core::CoreError;
use oclab_optim::OptimError;
use oclab_solvers::SolverError;
use thiserror::Error;

/// Errors raised by the baseline controllers.
#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error(transparent)]
    Optim(#[from] OptimError),

    /// A receding-horizon step failed; carries the global step index.
    #[error("controller failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<ControlError>,
    },
}

impl ControlError {
    /// Tags an error with the receding-horizon step it occurred at.
    pub fn at_step(self, step: usize) -> Self {
        ControlError::StepFailed {
            step,
            source: Box::new(self),
        }
    }
}
