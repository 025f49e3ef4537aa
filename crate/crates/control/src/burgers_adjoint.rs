use nalgebra::{DMatrix, DVector};
use oclab_core::{
    evaluate_basis, BasisSet, BoxBounds, SpaceTimeGrid, StateTrajectory, TargetProfile,
};
use oclab_solvers::{burgers_jacobian, newton_matrix, rollout_burgers, BurgersParams, Tridiag};

use crate::error::ControlError;
use crate::stats::SolveStats;

/// Tracking problem for the viscous Burgers dynamics under basis-weighted
/// forcing: keep the state near the target over the horizon with cost
/// `Σ_k [Δt/2·‖y_{k+1}−t‖² + α·Δt/2·‖c_k‖²]`.
#[derive(Debug, Clone)]
pub struct BurgersProblem {
    pub params: BurgersParams,
    pub grid: SpaceTimeGrid,
    pub basis: BasisSet,
    pub target: TargetProfile,
    /// Effort weight `α ≥ 0` of the horizon cost.
    pub alpha_effort: f64,
    pub bounds: BoxBounds,
    /// Initial state, `n` values (zero by default).
    pub initial: DVector<f64>,
}

impl BurgersProblem {
    pub fn new(
        params: BurgersParams,
        grid: SpaceTimeGrid,
        basis: BasisSet,
        target: TargetProfile,
        alpha_effort: f64,
        bounds: BoxBounds,
    ) -> Self {
        let initial = DVector::zeros(grid.n());
        Self {
            params,
            grid,
            basis,
            target,
            alpha_effort,
            bounds,
            initial,
        }
    }
}

/// The horizon cost the adjoint differentiates, evaluated on a trajectory
/// the caller already rolled out (`H + 1` states, `H` weight rows).
fn horizon_cost(
    trajectory: &StateTrajectory,
    weights: &DMatrix<f64>,
    target: &DVector<f64>,
    alpha: f64,
    dt: f64,
) -> f64 {
    let horizon = weights.nrows();
    let mut cost = 0.0;
    for k in 0..horizon {
        let diff = trajectory.state(k + 1) - target;
        cost += 0.5 * dt * diff.norm_squared();
        cost += 0.5 * alpha * dt * weights.row(k).norm_squared();
    }
    cost
}

/// Rolls out `weights` over `grid` and evaluates the horizon cost. Counts
/// one forward rollout. Fails if a Newton step diverges.
pub fn burgers_horizon_objective(
    y_start: &DVector<f64>,
    weights: &DMatrix<f64>,
    basis: &BasisSet,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
    target: &DVector<f64>,
    alpha: f64,
    stats: &mut SolveStats,
) -> Result<f64, ControlError> {
    let trajectory = rollout_burgers(y_start, weights, basis, params, grid)?;
    stats.forward_rollouts += 1;
    Ok(horizon_cost(&trajectory, weights, target, alpha, grid.dt()))
}

/// Incoming-state block of one implicit step: `−I − Δt/2·J(y_k)` on interior
/// rows, zero rows at the pinned endpoints (the boundary residuals
/// `y⁺_0 = y⁺_{n−1} = 0` do not involve the incoming state).
fn incoming_block(y: &DVector<f64>, params: &BurgersParams, grid: &SpaceTimeGrid) -> Tridiag {
    let n = grid.n();
    let half_dt = 0.5 * grid.dt();
    let mut m = burgers_jacobian(y, params, grid);
    for i in 1..n - 1 {
        m.diag[i] = -1.0 - half_dt * m.diag[i];
    }
    for i in 0..n - 1 {
        m.sub[i] *= -half_dt;
        m.sup[i] *= -half_dt;
    }
    // Boundary rows: the Jacobian already has zero rows there, and diag[0],
    // diag[n−1] were left untouched above, so they stay zero.
    m
}

/// Horizon cost and exact discrete-adjoint gradient of `H` weight rows for
/// the Burgers dynamics.
///
/// Forward, one rollout stores the states. Backward, with
/// `Ã_k = I − Δt/2·J(y_{k+1})` (the converged Newton matrix of step `k`) and
/// `B̃_k` the incoming-state block, the costate recursion
///
/// - `Ã_{H−1}ᵀ·q_{H−1} = Δt·(y_H − t)`
/// - `Ã_{k−1}ᵀ·q_{k−1} = Δt·(y_k − t) − B̃_kᵀ·q_k`
///
/// yields `∇_{c_k} = Δt·(α·c_k + Φ_intᵀ·q_k)`, where `Φ_int` is the basis
/// matrix with the pinned boundary rows zeroed. One forward and one backward
/// solve regardless of `H·M` (counted in `stats`).
pub fn burgers_adjoint_gradient(
    y_start: &DVector<f64>,
    weights: &DMatrix<f64>,
    basis: &BasisSet,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
    target: &DVector<f64>,
    alpha: f64,
    stats: &mut SolveStats,
) -> Result<(f64, DMatrix<f64>), ControlError> {
    let horizon = weights.nrows();
    let modes = weights.ncols();
    assert!(horizon >= 1, "horizon must be at least one step");
    assert_eq!(horizon, grid.steps(), "weights must cover the horizon grid");

    let trajectory = rollout_burgers(y_start, weights, basis, params, grid)?;
    stats.forward_rollouts += 1;
    let dt = grid.dt();
    let cost = horizon_cost(&trajectory, weights, target, alpha, dt);

    let mut phi_int = evaluate_basis(basis, grid)?;
    phi_int.row_mut(0).fill(0.0);
    phi_int.row_mut(grid.n() - 1).fill(0.0);

    let mut grad = DMatrix::zeros(horizon, modes);
    let mut p = dt * (trajectory.state(horizon) - target);
    for k in (0..horizon).rev() {
        let a_k = newton_matrix(&trajectory.state(k + 1), params, grid);
        let q = a_k.solve_transpose(&p)?;
        let g = dt * (alpha * weights.row(k).transpose() + phi_int.transpose() * &q);
        grad.row_mut(k).copy_from(&g.transpose());
        if k > 0 {
            let b_k = incoming_block(&trajectory.state(k), params, grid);
            p = dt * (trajectory.state(k) - target) - b_k.mul_vec_transpose(&q);
        }
    }
    stats.backward_sweeps += 1;

    Ok((cost, grad))
}
