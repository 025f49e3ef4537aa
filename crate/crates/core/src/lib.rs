//! Shared problem types for bound-constrained optimal control of 1D PDEs.
//!
//! This crate holds the vocabulary the rest of the workspace speaks:
//!
//! - [`SpaceTimeGrid`] — a uniform grid over `[0, L] × [0, T]`.
//! - [`BasisSet`] / [`evaluate_basis`] — low-dimensional spatial bases
//!   (cosine, sine, interleaved Fourier pairs) used to parameterize
//!   time-varying controls.
//! - [`ControlField`] — either a static spatial control `u(x)` or a
//!   trajectory of basis weights `c(t_k)`.
//! - [`StateTrajectory`] — the state `y(t_k, x_i)` produced by a simulator
//!   or surrogate rollout.
//! - [`TargetProfile`] — parametric terminal-state targets (constant, ramp,
//!   sine, parabola).
//! - [`objective_value`] — the tracking objective (terminal + running +
//!   control effort) with its component breakdown.
//! - [`terminal_mse`] — the per-node mean squared terminal error used for
//!   accuracy reporting.
//!
//! All types are immutable values after construction and safe to share
//! across threads.

mod basis;
mod error;
mod field;
mod grid;
mod metrics;
mod objective;
mod target;
mod trajectory;

pub use basis::{basis_gram, evaluate_basis, reconstruct_control, BasisKind, BasisSet};
pub use error::CoreError;
pub use field::{BoxBounds, ControlField};
pub use grid::SpaceTimeGrid;
pub use metrics::{max_abs_diff, mean_squared_error, terminal_mse};
pub use objective::{objective_value, Objective, ObjectiveWeights};
pub use target::TargetProfile;
pub use trajectory::StateTrajectory;
