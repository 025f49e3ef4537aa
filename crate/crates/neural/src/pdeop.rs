//! Joint controller/operator training through the differentiable surrogate.
//!
//! The control objective is evaluated on a closed-loop rollout of the
//! learned operator under the learned controller, all on one tape, so one
//! backward sweep yields exact gradients for both parameter sets — no
//! adjoint PDE solves and no finite differencing of the plant.
//!
//! Constraints enter through an augmented-Lagrangian outer loop
//! ([`LagrangeState`]): the loss is `J + λ_h·|h| + λ_g·max(0, g)`, where the
//! equality group `h` measures dynamics consistency (surrogate step vs. a
//! true solver step from the same state, probed every few epochs) plus the
//! initial-condition residual, and the inequality group `g` measures
//! actuator-bound slack. Multipliers only ever grow (`λ ← λ + ρ·violation`
//! with nonnegative violations), so sustained violation gets ever more
//! expensive. Because the controller squashes its outputs into the box and
//! the rollout starts from the exact initial state, `g` and the IC residual
//! are zero by construction and the reported loss of a violation-free run
//! is the objective itself, exactly.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oclab_core::{BasisSet, ObjectiveWeights, SpaceTimeGrid};
use oclab_solvers::{step_burgers, BurgersParams, CnOperator};

use crate::adam::AdamW;
use crate::controller::{ControllerVars, SurrogateController};
use crate::error::NeuralError;
use crate::operator::{OperatorNet, OperatorVars};
use crate::tape::{Tape, Var, VarRange};

/// Augmented-Lagrangian multipliers for the equality groups `h` and
/// inequality groups `g`.
#[derive(Debug, Clone)]
pub struct LagrangeState {
    lambda_h: Vec<f64>,
    lambda_g: Vec<f64>,
    rho: f64,
}

impl LagrangeState {
    /// Zero multipliers for `h_groups` equality and `g_groups` inequality
    /// constraint groups, with penalty rate `rho`.
    pub fn new(h_groups: usize, g_groups: usize, rho: f64) -> Result<Self, NeuralError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(NeuralError::Config(format!(
                "penalty rate must be positive, got {rho}"
            )));
        }
        Ok(Self {
            lambda_h: vec![0.0; h_groups],
            lambda_g: vec![0.0; g_groups],
            rho,
        })
    }

    pub fn multipliers_h(&self) -> &[f64] {
        &self.lambda_h
    }

    pub fn multipliers_g(&self) -> &[f64] {
        &self.lambda_g
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `λ ← λ + ρ·violation` for every group. Violations must already be
    /// nonnegative magnitudes (`|h|` and `max(0, g)`); a negative value is
    /// rejected so the multipliers stay monotone by construction.
    pub fn update(
        &mut self,
        h_violations: &[f64],
        g_violations: &[f64],
    ) -> Result<(), NeuralError> {
        assert_eq!(h_violations.len(), self.lambda_h.len(), "h group count");
        assert_eq!(g_violations.len(), self.lambda_g.len(), "g group count");
        for (group, &v) in h_violations.iter().chain(g_violations.iter()).enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(NeuralError::NegativeViolation { group, value: v });
            }
        }
        for (l, &v) in self.lambda_h.iter_mut().zip(h_violations) {
            *l += self.rho * v;
        }
        for (l, &v) in self.lambda_g.iter_mut().zip(g_violations) {
            *l += self.rho * v;
        }
        Ok(())
    }
}

/// Penalized loss `J + Σ λ·violation` on the tape. Terms with a zero
/// multiplier are skipped entirely, so with no active penalties the
/// returned node *is* the objective node — a violation-free run reports
/// `loss == J` exactly.
pub fn pdeop_loss(tape: &mut Tape, objective: Var, penalties: &[(Var, f64)]) -> Var {
    let mut loss = objective;
    for &(violation, lambda) in penalties {
        if lambda != 0.0 {
            let scaled = tape.affine_const(violation, lambda, 0.0);
            loss = tape.add(loss, scaled);
        }
    }
    loss
}

/// The true dynamics used for consistency probes and deployment.
#[derive(Debug, Clone, Copy)]
pub enum Plant<'a> {
    /// Crank–Nicolson reaction–diffusion step (static or basis input,
    /// according to the operator's input kind).
    Linear(&'a CnOperator),
    /// Implicit Burgers step forced through a basis.
    Burgers {
        params: &'a BurgersParams,
        basis: &'a BasisSet,
        grid: &'a SpaceTimeGrid,
    },
}

impl Plant<'_> {
    /// One true solver step from `y` under `input`.
    pub fn true_step(
        &self,
        y: &DVector<f64>,
        input: &DVector<f64>,
    ) -> Result<DVector<f64>, NeuralError> {
        match self {
            Plant::Linear(op) => Ok(op.step(y, input)),
            Plant::Burgers {
                params,
                basis,
                grid,
            } => Ok(step_burgers(y, input, basis, params, grid)?),
        }
    }
}

/// Handles into a closed-loop rollout built on a tape.
#[derive(Debug, Clone)]
pub struct TapeRollout {
    /// `steps + 1` state blocks; the first is the initial condition.
    pub states: Vec<VarRange>,
    /// One block for a static controller, `steps` blocks for a recurrent
    /// one.
    pub controls: Vec<VarRange>,
    pub controller_calls: usize,
    pub operator_calls: usize,
}

impl TapeRollout {
    /// Control block applied during step `k`.
    pub fn control_at(&self, k: usize) -> VarRange {
        if self.controls.len() == 1 {
            self.controls[0]
        } else {
            self.controls[k]
        }
    }
}

/// Rolls the surrogate dynamics forward under the learned controller,
/// entirely on the tape: every state and control stays differentiable with
/// respect to both parameter sets.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_rollout(
    tape: &mut Tape,
    controller: &SurrogateController,
    cvars: ControllerVars,
    operator: &OperatorNet,
    ovars: OperatorVars,
    trunk_features: &[VarRange],
    y0: VarRange,
    target: VarRange,
    steps: usize,
) -> TapeRollout {
    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::new();
    states.push(y0);
    let mut controller_calls = 0usize;
    let mut operator_calls = 0usize;
    let mut y = y0;

    if controller.is_recurrent() {
        let mut hidden = controller.zero_state_tape(tape);
        for _ in 0..steps {
            let (c, next_hidden) = controller.step_tape(tape, cvars, y, target, &hidden);
            hidden = next_hidden;
            controller_calls += 1;
            y = operator.step_tape(tape, ovars.branch, trunk_features, y, c);
            operator_calls += 1;
            controls.push(c);
            states.push(y);
        }
    } else {
        let c = controller.forward_static_tape(tape, cvars, y0, target);
        controller_calls += 1;
        controls.push(c);
        for _ in 0..steps {
            y = operator.step_tape(tape, ovars.branch, trunk_features, y, c);
            operator_calls += 1;
            states.push(y);
        }
    }

    TapeRollout {
        states,
        controls,
        controller_calls,
        operator_calls,
    }
}

/// Tracking objective of a rollout on the tape, following the reporting
/// conventions of the classical baselines: terminal `Δx·‖y_N − t‖²`,
/// running `λ·Δx·Δt·Σ_{k=1}^{N−1}‖y_k − t‖²`, and effort `γ·Δx·‖u‖²` for a
/// static profile or `γ·Δt·Σ_k‖c_k‖²` for per-step weights.
pub fn tracking_objective_tape(
    tape: &mut Tape,
    rollout: &TapeRollout,
    target: VarRange,
    grid: &SpaceTimeGrid,
    weights: &ObjectiveWeights,
) -> Var {
    let dx = grid.dx();
    let dt = grid.dt();
    let steps = rollout.states.len() - 1;

    let diff = tape.map_sub(rollout.states[steps], target);
    let quad = tape.dot(diff, diff);
    let mut total = tape.affine_const(quad, dx, 0.0);

    if weights.lambda_run != 0.0 && steps >= 2 {
        let mut acc: Option<Var> = None;
        for k in 1..steps {
            let d = tape.map_sub(rollout.states[k], target);
            let q = tape.dot(d, d);
            acc = Some(match acc {
                None => q,
                Some(a) => tape.add(a, q),
            });
        }
        let run = tape.affine_const(acc.expect("steps >= 2"), weights.lambda_run * dx * dt, 0.0);
        total = tape.add(total, run);
    }

    if weights.gamma != 0.0 {
        let effort = if rollout.controls.len() == 1 {
            let u = rollout.controls[0];
            let q = tape.dot(u, u);
            tape.affine_const(q, weights.gamma * dx, 0.0)
        } else {
            let mut acc: Option<Var> = None;
            for c in &rollout.controls {
                let q = tape.dot(*c, *c);
                acc = Some(match acc {
                    None => q,
                    Some(a) => tape.add(a, q),
                });
            }
            tape.affine_const(acc.expect("at least one step"), weights.gamma * dt, 0.0)
        };
        total = tape.add(total, effort);
    }

    total
}

/// Hyperparameters for the penalized closed-loop training loop.
#[derive(Debug, Clone)]
pub struct PdeopOptions {
    pub epochs: usize,
    /// Targets drawn (with replacement) from the task pool per epoch.
    pub batch: usize,
    pub lr_controller: f64,
    /// Learning rate for the joint operator refinement; `0` freezes the
    /// operator at its supervised fit.
    pub lr_operator: f64,
    pub weight_decay: f64,
    /// Multiplier growth rate ρ.
    pub rho: f64,
    /// Dynamics-consistency probes run every this many epochs.
    pub probe_period: usize,
    /// True-solver probes per epoch, split evenly across the batch.
    pub probes_per_epoch: usize,
    pub seed: u64,
    /// Loss ceiling; exceeding it aborts with a divergence error.
    pub divergence_limit: f64,
}

impl Default for PdeopOptions {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch: 4,
            lr_controller: 1e-3,
            lr_operator: 2e-4,
            weight_decay: 0.0,
            rho: 0.05,
            probe_period: 5,
            probes_per_epoch: 16,
            seed: 0,
            divergence_limit: 1e6,
        }
    }
}

/// The control problem a surrogate policy is trained for.
pub struct PdeopTask<'a> {
    pub grid: &'a SpaceTimeGrid,
    pub plant: Plant<'a>,
    pub initial: DVector<f64>,
    pub weights: ObjectiveWeights,
    /// Pool of target fields sampled during training.
    pub targets: Vec<DVector<f64>>,
}

/// One epoch of training history.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Penalized loss (equals the objective when no penalty is active).
    pub loss: f64,
    /// Mean closed-loop objective over the epoch batch.
    pub objective: f64,
    /// Mean squared terminal tracking error of the surrogate rollouts.
    pub terminal_mse: f64,
    /// Mean probe residual norm; `None` between probe epochs.
    pub dynamics_violation: Option<f64>,
    /// Initial-condition residual (zero by construction).
    pub ic_violation: Option<f64>,
    /// Worst actuator-bound slack (zero by construction).
    pub bound_violation: Option<f64>,
    pub multipliers_h: Vec<f64>,
    pub multipliers_g: Vec<f64>,
}

/// Training history plus the final multiplier state.
pub struct PdeopReport {
    pub history: Vec<EpochRecord>,
    pub lagrange: LagrangeState,
}

/// Trains the controller (and optionally refines the operator) by descending
/// the penalized closed-loop objective. See the module docs for the loss.
pub fn train_pdeop(
    controller: &mut SurrogateController,
    operator: &mut OperatorNet,
    task: &PdeopTask,
    opts: &PdeopOptions,
) -> Result<PdeopReport, NeuralError> {
    if opts.epochs == 0 || opts.batch == 0 {
        return Err(NeuralError::Config(
            "epochs and batch must be positive".into(),
        ));
    }
    if task.targets.is_empty() {
        return Err(NeuralError::Config("target pool is empty".into()));
    }
    if task.initial.len() != operator.state_dim() {
        return Err(NeuralError::Config(
            "initial state width does not match the operator".into(),
        ));
    }
    let steps = task.grid.steps();
    let xs: Vec<f64> = task.grid.xs().to_vec();
    let n = operator.state_dim();
    let (lo, hi) = controller.bounds();

    let mut lagrange = LagrangeState::new(2, 1, opts.rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ctrl_opts: Vec<AdamW> = controller
        .param_blocks()
        .iter()
        .map(|b| AdamW::new(b.len(), opts.lr_controller, opts.weight_decay))
        .collect();
    let mut op_branch = AdamW::new(operator.branch().param_count(), opts.lr_operator, 0.0);
    let mut op_trunk = AdamW::new(operator.trunk().param_count(), opts.lr_operator, 0.0);

    let mut history = Vec::with_capacity(opts.epochs);
    let mut tape = Tape::new();
    for epoch in 0..opts.epochs {
        let probe_epoch = epoch % opts.probe_period == 0;
        tape.clear();
        let cvars = controller.register(&mut tape);
        let ovars = operator.register(&mut tape);
        let feats = operator.trunk_features_tape(&mut tape, ovars.trunk, &xs);
        let y0 = tape.leaf_slice(task.initial.as_slice());

        let mut objective_acc: Option<Var> = None;
        let mut probe_norms: Vec<Var> = Vec::new();
        let mut terminal_mse_acc = 0.0;
        let mut bound_violation = 0.0f64;
        let probes_per_sample = if probe_epoch {
            (opts.probes_per_epoch / opts.batch).max(1)
        } else {
            0
        };

        for _ in 0..opts.batch {
            let t_idx = rng.gen_range(0..task.targets.len());
            let target_field = &task.targets[t_idx];
            let target = tape.leaf_slice(target_field.as_slice());
            let rollout = closed_loop_rollout(
                &mut tape, controller, cvars, operator, ovars, &feats, y0, target, steps,
            );
            let j = tracking_objective_tape(&mut tape, &rollout, target, task.grid, &task.weights);
            objective_acc = Some(match objective_acc {
                None => j,
                Some(a) => tape.add(a, j),
            });

            let terminal = tape.values(rollout.states[steps]);
            terminal_mse_acc += terminal
                .iter()
                .zip(target_field.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n as f64;
            for c in &rollout.controls {
                for &v in tape.values(*c) {
                    bound_violation = bound_violation.max((lo - v).max(v - hi).max(0.0));
                }
            }

            for p in 0..probes_per_sample {
                let k = (p * steps) / probes_per_sample;
                let y_k = DVector::from_column_slice(tape.values(rollout.states[k]));
                let c_k = DVector::from_column_slice(tape.values(rollout.control_at(k)));
                let truth = task.plant.true_step(&y_k, &c_k)?;
                let truth_leaves = tape.leaf_slice(truth.as_slice());
                let diff = tape.map_sub(rollout.states[k + 1], truth_leaves);
                let sq = tape.dot(diff, diff);
                let guarded = tape.affine_const(sq, 1.0, 1e-24);
                probe_norms.push(tape.sqrt(guarded));
            }
        }

        let scale = 1.0 / opts.batch as f64;
        let objective_var = tape.affine_const(objective_acc.expect("non-empty batch"), scale, 0.0);

        let mut penalties: Vec<(Var, f64)> = Vec::new();
        let mut dynamics_violation = None;
        if probe_epoch {
            let mut acc = probe_norms[0];
            for v in &probe_norms[1..] {
                acc = tape.add(acc, *v);
            }
            let mean = tape.affine_const(acc, 1.0 / probe_norms.len() as f64, 0.0);
            dynamics_violation = Some(tape.value(mean));
            penalties.push((mean, lagrange.multipliers_h()[0]));
        }
        let loss_var = pdeop_loss(&mut tape, objective_var, &penalties);
        let loss = tape.value(loss_var);
        if !loss.is_finite() {
            return Err(NeuralError::NonFiniteLoss {
                epoch,
                batch: 0,
                lr: opts.lr_controller,
                batch_size: opts.batch,
            });
        }
        if loss > opts.divergence_limit {
            return Err(NeuralError::Diverged {
                epoch,
                loss,
                limit: opts.divergence_limit,
            });
        }

        let adj = tape.backward(loss_var);
        let ranges = [cvars.primary, cvars.head];
        let mut block_idx = 0usize;
        for block in controller.param_blocks_mut() {
            while ranges[block_idx].is_empty() {
                block_idx += 1;
            }
            ctrl_opts[block_idx].step(block, adj.range(ranges[block_idx]));
            block_idx += 1;
        }
        if opts.lr_operator > 0.0 {
            op_branch.step(operator.branch_mut().params_mut(), adj.range(ovars.branch));
            op_trunk.step(operator.trunk_mut().params_mut(), adj.range(ovars.trunk));
        }

        if probe_epoch {
            lagrange.update(
                &[dynamics_violation.unwrap_or(0.0), 0.0],
                &[bound_violation],
            )?;
        }

        history.push(EpochRecord {
            epoch,
            loss,
            objective: tape.value(objective_var),
            terminal_mse: terminal_mse_acc / opts.batch as f64,
            dynamics_violation,
            ic_violation: probe_epoch.then_some(0.0),
            bound_violation: probe_epoch.then_some(bound_violation),
            multipliers_h: lagrange.multipliers_h().to_vec(),
            multipliers_g: lagrange.multipliers_g().to_vec(),
        });
    }

    Ok(PdeopReport { history, lagrange })
}

/// Writes the training history as CSV
/// (`epoch,loss,objective,terminal_mse,dynamics_violation,lambda_dynamics,lambda_bounds`).
pub fn write_pdeop_history_csv(path: &Path, report: &PdeopReport) -> Result<(), NeuralError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        file,
        "epoch,loss,objective,terminal_mse,dynamics_violation,lambda_dynamics,lambda_bounds"
    )?;
    for r in &report.history {
        writeln!(
            file,
            "{},{:.9e},{:.9e},{:.9e},{},{:.9e},{:.9e}",
            r.epoch,
            r.loss,
            r.objective,
            r.terminal_mse,
            r.dynamics_violation
                .map(|v| format!("{v:.9e}"))
                .unwrap_or_default(),
            r.multipliers_h.first().copied().unwrap_or(0.0),
            r.multipliers_g.first().copied().unwrap_or(0.0),
        )?;
    }
    Ok(())
}
