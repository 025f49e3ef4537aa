//! Classical optimal-control baselines for the benchmark PDEs.
//!
//! Four method families live here, all built on the reference solvers and
//! the generic optimizers:
//!
//! - **Direct** ([`direct_optimize_static`]) — black-box minimization of the
//!   static-control objective with finite-difference gradients; the cost of
//!   one gradient scales with the control dimension.
//! - **Discrete adjoints** ([`adjoint_gradient_static`],
//!   [`heat_adjoint_gradient`], [`burgers_adjoint_gradient`]) — exact
//!   gradients of the discrete objectives at the cost of one forward rollout
//!   plus one backward sweep, independent of the control dimension.
//! - **Linear MPC** ([`lmpc_control`]) — receding-horizon control of the
//!   linear system by dense condensing into a box QP per step.
//! - **Nonlinear MPC / closed-loop adjoint** ([`nmpc_control`]) — receding-
//!   horizon single shooting over the implicit Burgers step, minimizing each
//!   horizon with the quasi-Newton box optimizer driven by the horizon
//!   adjoint.
//!
//! Every run reports a [`SolveStats`] of forward rollouts and backward
//! sweeps so cost-model claims can be asserted, not just believed.

mod burgers_adjoint;
mod error;
mod heat;
mod lmpc;
mod nmpc;
mod stats;
mod voltage;
mod weights;

pub use burgers_adjoint::{burgers_adjoint_gradient, burgers_horizon_objective, BurgersProblem};
pub use error::ControlError;
pub use heat::{heat_adjoint_control, heat_adjoint_gradient, heat_open_loop_optimize, HeatProblem};
pub use lmpc::lmpc_control;
pub use nmpc::nmpc_control;
pub use stats::SolveStats;
pub use voltage::{
    adjoint_gradient_static, adjoint_optimize_static, direct_gradient_static,
    direct_optimize_static, StaticRun, VoltageProblem,
};
pub use weights::{MpcConfig, QuadWeights, WeightedRun};
