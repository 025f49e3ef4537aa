//! Ground-truth forward simulators for the benchmark PDEs.
//!
//! Two families live here:
//!
//! - [`CnOperator`] / [`rollout_linear`] — Crank–Nicolson one-step maps for
//!   linear reaction–diffusion dynamics with zero-flux (Neumann) boundaries.
//!   The operator is precomputed once (`A_CN`, input matrix `B`, drift `d`)
//!   so forward and adjoint sweeps are plain matrix–vector products.
//! - [`step_burgers`] / [`rollout_burgers`] — an implicit Crank–Nicolson
//!   stepper for viscous Burgers with homogeneous Dirichlet boundaries,
//!   solving each step's nonlinear residual by Newton iteration with the
//!   analytic tridiagonal Jacobian.
//!
//! Trajectories can be saved as `t,x,y` CSV ([`write_trajectory_csv`]) or as
//! a compact binary tensor ([`write_tensor`] / [`read_tensor`]) used by the
//! dataset pipeline.

mod burgers;
mod error;
mod io;
mod linear;
mod tridiag;

pub use burgers::{
    burgers_jacobian, burgers_semidiscrete_residual, newton_matrix, rollout_burgers, step_burgers,
    BurgersParams,
};
pub use error::SolverError;
pub use io::{read_tensor, write_tensor, write_trajectory_csv};
pub use linear::{
    build_cn_operator, neumann_laplacian, rollout_linear, BoundaryKind, CnInputKind, CnOperator,
    ReactionDiffusionParams,
};
pub use tridiag::Tridiag;
