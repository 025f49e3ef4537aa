use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while configuring or orchestrating a run.
#[derive(Debug, Error)]
pub enum BenchError {
    /// Malformed or inconsistent configuration input.
    #[error("config: {0}")]
    Config(String),

    /// A key the schema does not know (catches silent typos).
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    /// The file declares a schema this build cannot read.
    #[error("unsupported schema version {found} (this build reads {expected})")]
    Schema { expected: u32, found: u32 },

    /// The method does not apply to the system (e.g. `lmpc` on `burgers`).
    #[error("method `{method}` is not defined for system `{system}`")]
    MethodSystem { method: String, system: String },

    /// A pipeline artifact a run depends on has not been produced yet.
    #[error("missing artifact `{0}` (run the generation pipeline first)")]
    MissingArtifact(PathBuf),

    /// A pipeline stage failed; the label says which one.
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<BenchError>,
    },

    #[error(transparent)]
    Core(#[from] oclab_core::CoreError),

    #[error(transparent)]
    Solver(#[from] oclab_solvers::SolverError),

    #[error(transparent)]
    Optim(#[from] oclab_optim::OptimError),

    #[error(transparent)]
    Control(#[from] oclab_control::ControlError),

    #[error(transparent)]
    Stochastic(#[from] oclab_stochastic::StochasticError),

    #[error(transparent)]
    Neural(#[from] oclab_neural::NeuralError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Wraps the error with a pipeline stage label.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        BenchError::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
