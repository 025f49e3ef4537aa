//! Learned surrogates for PDE control: a differentiable one-step operator,
//! bounded neural controllers, and the penalized training loop that fits
//! them end to end.
//!
//! The centerpiece is a scalar reverse-mode [`Tape`]: closed-loop rollouts
//! of the learned operator under the learned controller are built as one
//! computation graph, so a single backward sweep yields exact gradients of
//! the control objective with respect to every parameter — no adjoint PDE
//! derivation and no per-parameter finite differencing.
//!
//! Workflow: generate transitions with the data crate, fit the operator
//! supervised ([`train_operator`]), then train the controller (optionally
//! refining the operator jointly) against the surrogate dynamics with
//! augmented-Lagrangian constraint handling ([`train_pdeop`]). Trained
//! models checkpoint to a versioned binary format and deploy against the
//! true solvers ([`deploy_policy`]).

mod adam;
mod checkpoint;
mod controller;
mod deploy;
mod error;
mod gradcheck;
mod nets;
mod operator;
mod pdeop;
mod tape;
mod train;

pub use adam::AdamW;
pub use checkpoint::{
    load_checkpoint, load_controller, load_operator, save_checkpoint, save_controller,
    save_operator, ArchDescriptor,
};
pub use controller::{ControllerVars, RecurrentTapeState, SurrogateController};
pub use deploy::{deploy_policy, surrogate_rollout_plain, Deployment};
pub use error::NeuralError;
pub use gradcheck::{tape_gradient_check, GradCheckReport};
pub use nets::{squash_plain, squash_tape, DenseNet, RecurrentCell};
pub use operator::{one_step_error_stats, rollout_max_abs_error, OperatorNet, OperatorVars};
pub use pdeop::{
    closed_loop_rollout, pdeop_loss, tracking_objective_tape, train_pdeop, write_pdeop_history_csv,
    EpochRecord, LagrangeState, PdeopOptions, PdeopReport, PdeopTask, Plant, TapeRollout,
};
pub use tape::{stable_sigmoid, Activation, Adjoints, Tape, Var, VarRange};
pub use train::{train_operator, write_loss_csv, OperatorTrainOptions, OperatorTrainReport};
