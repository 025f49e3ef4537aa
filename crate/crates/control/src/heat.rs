use nalgebra::{DMatrix, DVector};
use oclab_core::{
    objective_value, BasisSet, BoxBounds, ControlField, ObjectiveWeights, SpaceTimeGrid,
    StateTrajectory, TargetProfile,
};
use oclab_optim::{qn_minimize_box, BoxConstraints, QnOptions, QnResult};
use oclab_solvers::{build_cn_operator, CnInputKind, CnOperator, ReactionDiffusionParams};

use crate::error::ControlError;
use crate::stats::SolveStats;
use crate::weights::{MpcConfig, QuadWeights, WeightedRun};

/// Tracking problem for the linear reaction–diffusion system under
/// basis-weighted control: hold the state near a target profile over the
/// whole horizon while spending little control effort.
#[derive(Debug, Clone)]
pub struct HeatProblem {
    pub params: ReactionDiffusionParams,
    pub grid: SpaceTimeGrid,
    pub basis: BasisSet,
    pub target: TargetProfile,
    /// Reporting objective weights (`λ_run`, `γ`).
    pub weights: ObjectiveWeights,
    pub bounds: BoxBounds,
    /// Initial state, `n` values (zero by default).
    pub initial: DVector<f64>,
}

impl HeatProblem {
    pub fn new(
        params: ReactionDiffusionParams,
        grid: SpaceTimeGrid,
        basis: BasisSet,
        target: TargetProfile,
        weights: ObjectiveWeights,
        bounds: BoxBounds,
    ) -> Self {
        let initial = DVector::zeros(grid.n());
        Self {
            params,
            grid,
            basis,
            target,
            weights,
            bounds,
            initial,
        }
    }

    /// Assembles the Crank–Nicolson operator with the basis input map.
    pub fn operator(&self) -> Result<CnOperator, ControlError> {
        Ok(build_cn_operator(
            &self.params,
            &self.grid,
            CnInputKind::Basis(self.basis.clone()),
        )?)
    }

    /// The quadratic horizon weights whose full-horizon cost equals the
    /// reporting objective.
    pub fn quad_weights(&self) -> QuadWeights {
        QuadWeights::from_objective(&self.grid, &self.weights, self.basis.modes())
    }

    fn reporting_run(
        &self,
        weights: DMatrix<f64>,
        trajectory: StateTrajectory,
        stats: SolveStats,
    ) -> Result<WeightedRun, ControlError> {
        let control = ControlField::Weighted {
            weights: weights.clone(),
            basis: self.basis.clone(),
        };
        let objective = objective_value(&trajectory, &control, &self.target, &self.weights)?;
        Ok(WeightedRun {
            weights,
            trajectory,
            objective,
            stats,
        })
    }
}

/// Horizon cost and exact discrete-adjoint gradient of `H` weight rows.
///
/// Forward, the states `y_1 … y_H` are generated from `y_start` with one
/// operator step per row of `weights` and the cost
/// `Σ_{j=1}^{H−1} (y_j−t)ᵀT_Q(y_j−t) + (y_H−t)ᵀQ(y_H−t) + Σ_j c_jᵀR c_j`
/// is accumulated. Backward, the costate recursion
/// `λ_H = 2Q(y_H−t)`, `λ_j = A_CNᵀ·λ_{j+1} + 2T_Q(y_j−t)` yields
/// `∇_{c_j} = 2R·c_j + Bᵀ·λ_{j+1}` — one forward and one backward solve
/// regardless of `H·M` (counted in `stats`).
pub fn heat_adjoint_gradient(
    op: &CnOperator,
    y_start: &DVector<f64>,
    target: &DVector<f64>,
    weights: &DMatrix<f64>,
    quad: &QuadWeights,
    stats: &mut SolveStats,
) -> (f64, DMatrix<f64>) {
    let horizon = weights.nrows();
    let modes = weights.ncols();
    assert!(horizon >= 1, "horizon must be at least one step");

    // Forward sweep, storing every state.
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(y_start.clone());
    let mut cost = 0.0;
    for j in 0..horizon {
        let c = weights.row(j).transpose();
        let y_next = op.step(&states[j], &c);
        let stage = if j + 1 < horizon { &quad.t_q } else { &quad.q };
        let diff = &y_next - target;
        cost += diff.zip_fold(stage, 0.0, |acc, e, w| acc + w * e * e);
        cost += c.zip_fold(&quad.r, 0.0, |acc, e, w| acc + w * e * e);
        states.push(y_next);
    }
    stats.forward_rollouts += 1;

    // Backward sweep.
    let mut grad = DMatrix::zeros(horizon, modes);
    let mut lambda = 2.0 * (&states[horizon] - target).component_mul(&quad.q);
    let bt = op.b().transpose();
    let at = op.a_cn().transpose();
    for j in (0..horizon).rev() {
        let c = weights.row(j).transpose();
        let g = 2.0 * c.component_mul(&quad.r) + &bt * &lambda;
        grad.row_mut(j).copy_from(&g.transpose());
        if j > 0 {
            lambda = &at * lambda + 2.0 * (&states[j] - target).component_mul(&quad.t_q);
        }
    }
    stats.backward_sweeps += 1;

    (cost, grad)
}

fn flatten(w: &DMatrix<f64>) -> DVector<f64> {
    let (rows, cols) = w.shape();
    DVector::from_fn(rows * cols, |i, _| w[(i / cols, i % cols)])
}

fn unflatten(z: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |r, c| z[r * cols + c])
}

/// Minimizes the horizon cost over `H×M` weight rows from `w0`.
fn horizon_optimize(
    op: &CnOperator,
    y_start: &DVector<f64>,
    target: &DVector<f64>,
    w0: &DMatrix<f64>,
    quad: &QuadWeights,
    bounds: &BoxBounds,
    opts: &QnOptions,
    stats: &mut SolveStats,
) -> Result<(DMatrix<f64>, QnResult), ControlError> {
    let (horizon, modes) = w0.shape();
    let box_c = BoxConstraints::uniform(horizon * modes, bounds.lower(), bounds.upper())?;
    let qn = qn_minimize_box(
        |z| {
            let w = unflatten(z, horizon, modes);
            let (cost, grad) = heat_adjoint_gradient(op, y_start, target, &w, quad, stats);
            (cost, flatten(&grad))
        },
        &flatten(w0),
        &box_c,
        opts,
    )?;
    Ok((unflatten(&qn.x, horizon, modes), qn))
}

/// Open-loop adjoint baseline: optimizes all `N_t` weight rows at once
/// against the full-horizon cost, starting from zero weights.
pub fn heat_open_loop_optimize(
    problem: &HeatProblem,
    opts: &QnOptions,
) -> Result<WeightedRun, ControlError> {
    let op = problem.operator()?;
    let target = problem.target.evaluate(&problem.grid);
    let quad = problem.quad_weights();
    let steps = problem.grid.steps();
    let mut stats = SolveStats::new();
    let w0 = DMatrix::zeros(steps, problem.basis.modes());
    let (weights, _) = horizon_optimize(
        &op,
        &problem.initial,
        &target,
        &w0,
        &quad,
        &problem.bounds,
        opts,
        &mut stats,
    )?;

    let trajectory = replay(&op, &problem.initial, &weights, &problem.grid)?;
    problem.reporting_run(weights, trajectory, stats)
}

/// Receding-horizon adjoint controller.
///
/// At every step it minimizes the cost over the next
/// `min(N_p, N_t − s)` weight rows with the adjoint gradient, warm-started
/// by shifting the previous solution one step, applies the first row to the
/// plant, and moves on. The applied true step is counted as a forward
/// rollout.
pub fn heat_adjoint_control(
    problem: &HeatProblem,
    cfg: &MpcConfig,
) -> Result<WeightedRun, ControlError> {
    let op = problem.operator()?;
    let target = problem.target.evaluate(&problem.grid);
    let steps = problem.grid.steps();
    let modes = problem.basis.modes();
    let mut stats = SolveStats::new();

    let mut y = problem.initial.clone();
    let mut states = DMatrix::zeros(steps + 1, problem.grid.n());
    states.row_mut(0).copy_from(&y.transpose());
    let mut applied = DMatrix::zeros(steps, modes);
    let mut warm: Option<DMatrix<f64>> = None;

    for s in 0..steps {
        let horizon = cfg.horizon.min(steps - s);
        let w0 = shifted_warm_start(warm.as_ref(), horizon, modes);
        let (w_star, _) = horizon_optimize(
            &op,
            &y,
            &target,
            &w0,
            &cfg.weights,
            &cfg.bounds,
            &cfg.inner,
            &mut stats,
        )
        .map_err(|e| e.at_step(s))?;

        let c = w_star.row(0).transpose();
        applied.row_mut(s).copy_from(&c.transpose());
        y = op.step(&y, &c);
        stats.forward_rollouts += 1;
        states.row_mut(s + 1).copy_from(&y.transpose());
        warm = Some(w_star);
    }

    let trajectory = StateTrajectory::new(problem.grid.clone(), states)?;
    problem.reporting_run(applied, trajectory, stats)
}

/// Previous horizon solution shifted one step forward (last row repeated),
/// truncated or padded to the new horizon; zeros on the first step.
pub(crate) fn shifted_warm_start(
    previous: Option<&DMatrix<f64>>,
    horizon: usize,
    modes: usize,
) -> DMatrix<f64> {
    let mut w0 = DMatrix::zeros(horizon, modes);
    if let Some(prev) = previous {
        let last = prev.nrows() - 1;
        for j in 0..horizon {
            let src = (j + 1).min(last);
            w0.row_mut(j).copy_from(&prev.row(src));
        }
    }
    w0
}

/// Replays `N_t` weight rows through the operator into a full trajectory.
pub(crate) fn replay(
    op: &CnOperator,
    y0: &DVector<f64>,
    weights: &DMatrix<f64>,
    grid: &SpaceTimeGrid,
) -> Result<StateTrajectory, ControlError> {
    let mut states = DMatrix::zeros(grid.steps() + 1, grid.n());
    let mut y = y0.clone();
    states.row_mut(0).copy_from(&y.transpose());
    for k in 0..grid.steps() {
        y = op.step(&y, &weights.row(k).transpose());
        states.row_mut(k + 1).copy_from(&y.transpose());
    }
    Ok(StateTrajectory::new(grid.clone(), states)?)
}
