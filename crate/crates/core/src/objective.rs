use crate::error::CoreError;
use crate::field::ControlField;
use crate::target::TargetProfile;
use crate::trajectory::StateTrajectory;

/// Weights on the running-tracking and control-effort terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    /// Weight `λ_run ≥ 0` on the running tracking cost.
    pub lambda_run: f64,
    /// Weight `γ ≥ 0` on the control effort.
    pub gamma: f64,
}

impl ObjectiveWeights {
    pub fn new(lambda_run: f64, gamma: f64) -> Result<Self, CoreError> {
        if !(lambda_run.is_finite() && lambda_run >= 0.0) {
            return Err(CoreError::Config(format!(
                "running weight must be finite and non-negative, got {lambda_run}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(CoreError::Config(format!(
                "effort weight must be finite and non-negative, got {gamma}"
            )));
        }
        Ok(Self { lambda_run, gamma })
    }

    /// Terminal-cost-only objective (`λ_run = γ = 0`).
    pub fn terminal_only() -> Self {
        Self {
            lambda_run: 0.0,
            gamma: 0.0,
        }
    }
}

/// Objective value with its component breakdown.
///
/// `total = terminal + λ_run·running + γ·effort`; the stored components are
/// the *unweighted* integrals so callers can re-weight for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub terminal: f64,
    pub running: f64,
    pub effort: f64,
}

/// Evaluates the tracking objective of a rollout.
///
/// All spatial integrals use the endpoint-inclusive rectangle rule with mass
/// `Δx·I` (the convention the adjoint gradients are derived against), and
/// time sums use step weight `Δt`:
///
/// - terminal: `Δx·Σ_i (y(T, x_i) − t_i)²`
/// - running: `Δx·Δt·Σ_{k=1}^{N_t−1} Σ_i (y(t_k, x_i) − t_i)²` (interior
///   steps only; the terminal step is counted by the terminal term)
/// - effort: `Δt·Σ_{k=0}^{N_t−1} ‖c(t_k)‖²` for weighted controls, or
///   `Δx·Σ_i u(x_i)²` for static controls (no time factor — the static
///   profile is a single decision variable)
pub fn objective_value(
    traj: &StateTrajectory,
    control: &ControlField,
    target: &TargetProfile,
    w: &ObjectiveWeights,
) -> Result<Objective, CoreError> {
    let grid = traj.grid();
    control.validate(grid)?;

    let t = target.evaluate(grid);
    let values = traj.values();
    let n = grid.n();
    let steps = grid.steps();
    let dx = grid.dx();
    let dt = grid.dt();

    let slice_sq = |k: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let d = values[(k, i)] - t[i];
            acc += d * d;
        }
        acc
    };

    let terminal = dx * slice_sq(steps);

    let mut running = 0.0;
    for k in 1..steps {
        running += slice_sq(k);
    }
    running *= dx * dt;

    let effort = match control {
        ControlField::Static(u) => dx * u.iter().map(|v| v * v).sum::<f64>(),
        ControlField::Weighted { weights, .. } => {
            let mut acc = 0.0;
            for k in 0..steps {
                acc += weights.row(k).iter().map(|v| v * v).sum::<f64>();
            }
            dt * acc
        }
    };

    Ok(Objective {
        total: terminal + w.lambda_run * running + w.gamma * effort,
        terminal,
        running,
        effort,
    })
}
