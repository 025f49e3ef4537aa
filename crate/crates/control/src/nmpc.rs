use nalgebra::{DMatrix, DVector};
use oclab_core::{objective_value, ControlField, ObjectiveWeights, SpaceTimeGrid, StateTrajectory};
use oclab_optim::{qn_minimize_box, BoxConstraints, QnOptions};
use oclab_solvers::step_burgers;

use crate::burgers_adjoint::{burgers_adjoint_gradient, BurgersProblem};
use crate::error::ControlError;
use crate::stats::SolveStats;
use crate::weights::WeightedRun;

/// Nonlinear receding-horizon controller for the Burgers dynamics.
///
/// At every step it minimizes the horizon cost over the next
/// `min(N_p, N_t − s)` weight rows by projected quasi-Newton iteration with
/// the discrete-adjoint gradient, warm-started by shifting the previous
/// solution one step, applies the first row to the plant, and moves on. The
/// horizon sub-problems live on their own `H`-step grid with the global step
/// size; the applied true step (counted as a forward rollout) advances the
/// global trajectory.
///
/// `inner` caps the per-step optimizer; loose caps (tens of iterations) give
/// the nonlinear MPC of the benchmarks, tight ones a cheaper suboptimal
/// controller.
pub fn nmpc_control(
    problem: &BurgersProblem,
    horizon: usize,
    inner: &QnOptions,
) -> Result<WeightedRun, ControlError> {
    assert!(horizon >= 1, "prediction horizon must be at least 1");
    let grid = &problem.grid;
    let steps = grid.steps();
    let modes = problem.basis.modes();
    let target = problem.target.evaluate(grid);
    let mut stats = SolveStats::new();

    let mut y = problem.initial.clone();
    let mut states = DMatrix::zeros(steps + 1, grid.n());
    states.row_mut(0).copy_from(&y.transpose());
    let mut applied = DMatrix::zeros(steps, modes);
    let mut warm: Option<DMatrix<f64>> = None;

    for s in 0..steps {
        let h = horizon.min(steps - s);
        let horizon_grid = SpaceTimeGrid::new(grid.length(), grid.n(), grid.dt() * h as f64, h)
            .map_err(|e| ControlError::from(e).at_step(s))?;
        let w0 = crate::heat::shifted_warm_start(warm.as_ref(), h, modes);

        let box_c =
            BoxConstraints::uniform(h * modes, problem.bounds.lower(), problem.bounds.upper())?;
        let qn = qn_minimize_box(
            |z| {
                let w = DMatrix::from_fn(h, modes, |r, c| z[r * modes + c]);
                match burgers_adjoint_gradient(
                    &y,
                    &w,
                    &problem.basis,
                    &problem.params,
                    &horizon_grid,
                    &target,
                    problem.alpha_effort,
                    &mut stats,
                ) {
                    Ok((cost, grad)) => {
                        let g = DVector::from_fn(h * modes, |i, _| grad[(i / modes, i % modes)]);
                        (cost, g)
                    }
                    // A diverged Newton solve at a trial point: report an
                    // infinite cost so the line search backs off.
                    Err(_) => (f64::INFINITY, DVector::zeros(h * modes)),
                }
            },
            &DVector::from_fn(h * modes, |i, _| w0[(i / modes, i % modes)]),
            &box_c,
            inner,
        )
        .map_err(|e| ControlError::from(e).at_step(s))?;
        let w_star = DMatrix::from_fn(h, modes, |r, c| qn.x[r * modes + c]);

        let c = w_star.row(0).transpose();
        applied.row_mut(s).copy_from(&c.transpose());
        y = step_burgers(&y, &c, &problem.basis, &problem.params, grid)
            .map_err(|e| ControlError::from(e).at_step(s))?;
        stats.forward_rollouts += 1;
        states.row_mut(s + 1).copy_from(&y.transpose());
        warm = Some(w_star);
    }

    let trajectory = StateTrajectory::new(grid.clone(), states)?;
    let control = ControlField::Weighted {
        weights: applied.clone(),
        basis: problem.basis.clone(),
    };
    // Reporting convention: λ_run = 1, γ = α.
    let reporting = ObjectiveWeights {
        lambda_run: 1.0,
        gamma: problem.alpha_effort,
    };
    let objective = objective_value(&trajectory, &control, &problem.target, &reporting)?;
    Ok(WeightedRun {
        weights: applied,
        trajectory,
        objective,
        stats,
    })
}
