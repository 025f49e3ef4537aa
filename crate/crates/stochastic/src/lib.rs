//! Gaussian-random-field control sampling and dataset generation.
//!
//! Operator training needs a diverse set of (state, input, next-state)
//! transitions. This crate draws control inputs from a zero-mean Gaussian
//! random field with a squared-exponential kernel ([`sample_grf`]), clips
//! them to the actuator box, rolls them through the reference solvers, and
//! packages the results as per-trajectory records with a deterministic
//! 80/10/10 train/validation/test split.
//!
//! Everything is seeded: a base seed plus the trajectory index derive every
//! stream, so datasets are bitwise reproducible regardless of how many
//! worker threads generate them.

mod dataset;
mod error;
mod grf;
mod io;

pub use dataset::{
    generate_static_control_dataset, generate_weight_trajectory_dataset, mix_seed, Dataset,
    OneStepSample, Split, SystemKind, TrajectoryRecord, WeightSystem,
};
pub use error::StochasticError;
pub use grf::GrfKernel;
pub use io::{load_dataset, save_dataset};

pub use grf::sample_grf;
