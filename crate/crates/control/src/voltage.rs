use std::cell::Cell;

use nalgebra::DVector;
use oclab_core::{
    objective_value, BoxBounds, ControlField, CoreError, Objective, ObjectiveWeights,
    SpaceTimeGrid, StateTrajectory, TargetProfile,
};
use oclab_optim::{fd_gradient, qn_minimize_box, BoxConstraints, FdScheme, QnOptions, QnResult};
use oclab_solvers::{
    build_cn_operator, rollout_linear, CnInputKind, CnOperator, ReactionDiffusionParams,
};

use crate::error::ControlError;
use crate::stats::SolveStats;

/// The static-control tracking problem: drive the linear reaction–diffusion
/// system to a target terminal profile with one time-independent spatial
/// control, trading terminal error against control energy
/// (`J = Δx·‖y(T)−t‖² + γ·Δx·‖u‖²`).
#[derive(Debug, Clone)]
pub struct VoltageProblem {
    pub params: ReactionDiffusionParams,
    pub grid: SpaceTimeGrid,
    pub target: TargetProfile,
    /// Effort weight `γ ≥ 0`.
    pub gamma: f64,
    pub bounds: BoxBounds,
    /// Initial state, `n` values (zero by default).
    pub initial: DVector<f64>,
}

impl VoltageProblem {
    pub fn new(
        params: ReactionDiffusionParams,
        grid: SpaceTimeGrid,
        target: TargetProfile,
        gamma: f64,
        bounds: BoxBounds,
    ) -> Result<Self, ControlError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(CoreError::Config(format!(
                "effort weight must be finite and non-negative, got {gamma}"
            ))
            .into());
        }
        let initial = DVector::zeros(grid.n());
        Ok(Self {
            params,
            grid,
            target,
            gamma,
            bounds,
            initial,
        })
    }

    /// Assembles the Crank–Nicolson operator for this problem.
    pub fn operator(&self) -> Result<CnOperator, ControlError> {
        Ok(build_cn_operator(
            &self.params,
            &self.grid,
            CnInputKind::Static,
        )?)
    }

    fn reporting_weights(&self) -> ObjectiveWeights {
        ObjectiveWeights {
            lambda_run: 0.0,
            gamma: self.gamma,
        }
    }

    /// Rolls out `u` and evaluates the objective. Counts one forward rollout.
    pub fn objective(
        &self,
        op: &CnOperator,
        u: &DVector<f64>,
        stats: &mut SolveStats,
    ) -> Result<(Objective, StateTrajectory), ControlError> {
        let control = ControlField::Static(u.clone());
        let traj = rollout_linear(op, &self.initial, &control)?;
        stats.forward_rollouts += 1;
        let obj = objective_value(&traj, &control, &self.target, &self.reporting_weights())?;
        Ok((obj, traj))
    }
}

/// Outcome of a static-control optimization.
#[derive(Debug, Clone)]
pub struct StaticRun {
    /// Optimized control profile, `n` values inside the bounds.
    pub control: DVector<f64>,
    pub trajectory: StateTrajectory,
    pub objective: Objective,
    /// Raw optimizer result (status, iterations, trace).
    pub qn: QnResult,
    pub stats: SolveStats,
}

/// Objective and forward finite-difference gradient at `u`.
///
/// Treats the simulator as a black box: one rollout at `u` plus one per
/// coordinate, `n + 1` forward rollouts total (counted in `stats`).
pub fn direct_gradient_static(
    problem: &VoltageProblem,
    op: &CnOperator,
    u: &DVector<f64>,
    stats: &mut SolveStats,
) -> Result<(f64, DVector<f64>), ControlError> {
    let at_u = Cell::new(f64::NAN);
    let mut local = SolveStats::new();
    let (grad, _) = fd_gradient(
        |v| {
            let (obj, _) = problem
                .objective(op, v, &mut local)
                .expect("linear rollout of a finite control");
            // The forward scheme's first evaluation is at `u` itself.
            if at_u.get().is_nan() {
                at_u.set(obj.total);
            }
            obj.total
        },
        u,
        &FdScheme::forward(),
    )?;
    stats.absorb(local);
    Ok((at_u.get(), grad))
}

/// Objective and exact discrete-adjoint gradient at `u`.
///
/// One forward rollout stores the states; the backward sweep
/// `λ_{N_t} = 2Δx·(y_{N_t} − t)`, `λ_k = A_CNᵀ·λ_{k+1}` then yields
/// `∇J = 2γΔx·u + Bᵀ·Σ_k λ_{k+1}` — one forward plus one backward solve,
/// independent of the control dimension (both counted in `stats`).
pub fn adjoint_gradient_static(
    problem: &VoltageProblem,
    op: &CnOperator,
    u: &DVector<f64>,
    stats: &mut SolveStats,
) -> Result<(f64, DVector<f64>), ControlError> {
    let (obj, traj) = problem.objective(op, u, stats)?;
    let t = problem.target.evaluate(&problem.grid);
    let dx = problem.grid.dx();
    let steps = problem.grid.steps();

    // λ_{N_t}, then pull back with A_CNᵀ; only the sum over steps is needed.
    let mut lambda = 2.0 * dx * (traj.terminal() - &t);
    let mut lambda_sum = lambda.clone();
    for _ in 1..steps {
        lambda = op.a_cn().transpose() * lambda;
        lambda_sum += &lambda;
    }
    stats.backward_sweeps += 1;

    let grad = 2.0 * problem.gamma * dx * u + op.b().transpose() * lambda_sum;
    Ok((obj.total, grad))
}

fn optimize_static<G>(
    problem: &VoltageProblem,
    op: &CnOperator,
    opts: &QnOptions,
    mut gradient: G,
) -> Result<StaticRun, ControlError>
where
    G: FnMut(
        &VoltageProblem,
        &CnOperator,
        &DVector<f64>,
        &mut SolveStats,
    ) -> Result<(f64, DVector<f64>), ControlError>,
{
    let n = problem.grid.n();
    let bounds = BoxConstraints::uniform(n, problem.bounds.lower(), problem.bounds.upper())?;
    let u0 = DVector::zeros(n);
    let mut stats = SolveStats::new();
    // Pre-flight: surface configuration errors before entering the panic-free
    // optimizer closure.
    gradient(problem, op, &u0, &mut SolveStats::new())?;

    let qn = qn_minimize_box(
        |u| {
            gradient(problem, op, u, &mut stats)
                .expect("static gradient is well-defined on the box")
        },
        &u0,
        &bounds,
        opts,
    )?;

    let mut final_stats = SolveStats::new();
    let (objective, trajectory) = problem.objective(op, &qn.x, &mut final_stats)?;
    stats.absorb(final_stats);
    Ok(StaticRun {
        control: qn.x.clone(),
        trajectory,
        objective,
        qn,
        stats,
    })
}

/// Direct method: quasi-Newton box minimization with forward
/// finite-difference gradients, starting from `u = 0`.
pub fn direct_optimize_static(
    problem: &VoltageProblem,
    opts: &QnOptions,
) -> Result<StaticRun, ControlError> {
    let op = problem.operator()?;
    optimize_static(problem, &op, opts, direct_gradient_static)
}

/// Adjoint method: the same optimizer driven by exact discrete-adjoint
/// gradients, starting from `u = 0`.
pub fn adjoint_optimize_static(
    problem: &VoltageProblem,
    opts: &QnOptions,
) -> Result<StaticRun, ControlError> {
    let op = problem.operator()?;
    optimize_static(problem, &op, opts, adjoint_gradient_static)
}
