//! Behavioral contracts of the closed-loop controllers: the receding-horizon
//! QP equals the one-shot full-horizon QP on linear dynamics, every method
//! respects its box, and optimized runs beat doing nothing.

use nalgebra::{DMatrix, DVector};
use oclab_control::{
    adjoint_optimize_static, direct_optimize_static, heat_adjoint_control, heat_open_loop_optimize,
    lmpc_control, nmpc_control, BurgersProblem, HeatProblem, MpcConfig, QuadWeights,
    VoltageProblem,
};
use oclab_core::{
    terminal_mse, BasisKind, BasisSet, BoxBounds, ObjectiveWeights, SpaceTimeGrid, TargetProfile,
};
use oclab_optim::{solve_box_qp, BoxConstraints, QnOptions};
use oclab_solvers::{rollout_burgers, BurgersParams, CnOperator, ReactionDiffusionParams};
use proptest::prelude::*;

fn small_heat_problem(bound: f64) -> HeatProblem {
    let n = 9;
    let grid = SpaceTimeGrid::new(1.0, n, 0.3, 6).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(0.1, 0.5, 2.0, 0.0, n).unwrap();
    let basis = BasisSet::new(BasisKind::Cosine, 2, 1.0).unwrap();
    HeatProblem::new(
        params,
        grid,
        basis,
        TargetProfile::Ramp(0.4, 0.1),
        ObjectiveWeights::new(1.0, 1e-3).unwrap(),
        BoxBounds::new(-bound, bound).unwrap(),
    )
}

/// Full-horizon condensing built independently of the controller: columns of
/// the prediction map are measured by unit-weight simulations against the
/// zero-control rollout, and the stacked QP is handed to the box-QP solver
/// in one shot.
fn one_shot_qp(problem: &HeatProblem, quad: &QuadWeights) -> DMatrix<f64> {
    let op = problem.operator().unwrap();
    let grid = &problem.grid;
    let n = grid.n();
    let steps = grid.steps();
    let modes = problem.basis.modes();
    let target = problem.target.evaluate(grid);

    let simulate = |w: &DMatrix<f64>| -> DVector<f64> {
        let mut y = problem.initial.clone();
        let mut stacked = DVector::zeros(steps * n);
        for j in 0..steps {
            y = op.step(&y, &w.row(j).transpose());
            stacked.rows_mut(j * n, n).copy_from(&y);
        }
        stacked
    };

    let free = simulate(&DMatrix::zeros(steps, modes));
    let mut g = DMatrix::zeros(steps * n, steps * modes);
    for i in 0..steps {
        for m in 0..modes {
            let mut w = DMatrix::zeros(steps, modes);
            w[(i, m)] = 1.0;
            g.column_mut(i * modes + m)
                .copy_from(&(simulate(&w) - &free));
        }
    }

    let mut w_diag = DVector::zeros(steps * n);
    let mut err = DVector::zeros(steps * n);
    for j in 1..=steps {
        let stage = if j < steps { &quad.t_q } else { &quad.q };
        w_diag.rows_mut((j - 1) * n, n).copy_from(stage);
        let mut rows = err.rows_mut((j - 1) * n, n);
        rows.copy_from(&free.rows((j - 1) * n, n));
        rows -= &target;
    }

    let wg = DMatrix::from_fn(steps * n, steps * modes, |r, c| w_diag[r] * g[(r, c)]);
    let mut p = g.transpose() * wg;
    for i in 0..steps {
        for m in 0..modes {
            p[(i * modes + m, i * modes + m)] += quad.r[m];
        }
    }
    let b = g.transpose() * w_diag.component_mul(&err);
    let box_c = BoxConstraints::uniform(
        steps * modes,
        problem.bounds.lower(),
        problem.bounds.upper(),
    )
    .unwrap();
    let z = solve_box_qp(&(2.0 * p), &(2.0 * b), &box_c).unwrap();
    DMatrix::from_fn(steps, modes, |r, c| z[r * modes + c])
}

fn quad_cost(op: &CnOperator, problem: &HeatProblem, quad: &QuadWeights, w: &DMatrix<f64>) -> f64 {
    let target = problem.target.evaluate(&problem.grid);
    let mut y = problem.initial.clone();
    let mut cost = 0.0;
    let steps = w.nrows();
    for j in 0..steps {
        let c = w.row(j).transpose();
        y = op.step(&y, &c);
        let stage = if j + 1 < steps { &quad.t_q } else { &quad.q };
        let diff = &y - &target;
        cost += diff.zip_fold(stage, 0.0, |acc, e, s| acc + s * e * e);
        cost += c.zip_fold(&quad.r, 0.0, |acc, e, s| acc + s * e * e);
    }
    cost
}

/// With the prediction horizon covering the whole run, re-solving the QP at
/// every step must reproduce the one-shot full-horizon minimizer: the tail
/// of an optimal plan is optimal (deterministic dynamics, strictly convex
/// QP). Checked both with slack bounds and with bounds tight enough to
/// activate.
#[test]
fn full_horizon_lmpc_equals_one_shot_qp() {
    for bound in [1.0, 0.05] {
        let problem = small_heat_problem(bound);
        let quad = QuadWeights::new(
            DVector::from_element(9, 1.0),
            DVector::from_element(9, 0.05),
            DVector::from_element(2, 0.01),
        )
        .unwrap();
        let cfg = MpcConfig::new(problem.grid.steps(), quad.clone(), problem.bounds.clone());
        let run = lmpc_control(&problem, &cfg).unwrap();
        let one_shot = one_shot_qp(&problem, &quad);

        let gap = (&run.weights - &one_shot).amax();
        assert!(
            gap <= 5e-6,
            "bound {bound}: receding-horizon weights deviate from the one-shot QP by {gap:.2e}"
        );

        let op = problem.operator().unwrap();
        let c_mpc = quad_cost(&op, &problem, &quad, &run.weights);
        let c_oneshot = quad_cost(&op, &problem, &quad, &one_shot);
        assert!((c_mpc - c_oneshot).abs() <= 1e-8 * c_oneshot.max(1e-12));
    }
}

#[test]
fn lmpc_tracks_and_respects_bounds() {
    let problem = small_heat_problem(1.0);
    let cfg = MpcConfig::new(4, problem.quad_weights(), problem.bounds.clone());
    let run = lmpc_control(&problem, &cfg).unwrap();

    let steps = problem.grid.steps();
    assert_eq!(run.weights.nrows(), steps);
    assert_eq!(run.stats.forward_rollouts, steps);
    assert!(run
        .weights
        .iter()
        .all(|&w| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&w)));

    let controlled = terminal_mse(&run.trajectory, &problem.target);
    let free = {
        let op = problem.operator().unwrap();
        let mut y = problem.initial.clone();
        for _ in 0..steps {
            y = op.step(&y, &DVector::zeros(2));
        }
        let t = problem.target.evaluate(&problem.grid);
        (y - t).norm_squared() / problem.grid.n() as f64
    };
    assert!(
        controlled < 0.05 * free,
        "LMPC terminal MSE {controlled:.3e} is not well below the free MSE {free:.3e}"
    );
}

#[test]
fn receding_adjoint_matches_lmpc_closely_on_the_linear_system() {
    // Same horizon cost, two different inner solvers (dense QP vs projected
    // quasi-Newton): the closed-loop objectives should land close together.
    let problem = small_heat_problem(1.0);
    let cfg =
        MpcConfig::new(4, problem.quad_weights(), problem.bounds.clone()).with_inner_iters(60);
    let qp_run = lmpc_control(&problem, &cfg).unwrap();
    let qn_run = heat_adjoint_control(&problem, &cfg).unwrap();

    let rel =
        (qn_run.objective.total - qp_run.objective.total).abs() / qp_run.objective.total.max(1e-12);
    assert!(
        rel <= 0.05,
        "adjoint MPC total {:.6e} vs LMPC total {:.6e} (rel gap {rel:.2e})",
        qn_run.objective.total,
        qp_run.objective.total
    );
    assert!(qn_run.weights.iter().all(|&w| w.abs() <= 1.0 + 1e-9));
    // One true plant step per control interval, plus the inner evaluations.
    assert!(qn_run.stats.forward_rollouts > problem.grid.steps());
    assert!(qn_run.stats.backward_sweeps > 0);
}

#[test]
fn open_loop_heat_optimization_improves_on_zero_control() {
    let problem = small_heat_problem(1.0);
    let run = heat_open_loop_optimize(&problem, &QnOptions::default()).unwrap();

    let op = problem.operator().unwrap();
    let zero_cost = quad_cost(
        &op,
        &problem,
        &problem.quad_weights(),
        &DMatrix::zeros(problem.grid.steps(), 2),
    );
    assert!(run.objective.total < 0.2 * zero_cost);
    assert!(run.weights.iter().all(|&w| w.abs() <= 1.0 + 1e-9));
}

#[test]
fn direct_and_adjoint_static_runs_agree() {
    let n = 21;
    let grid = SpaceTimeGrid::new(1.0, n, 2.0, 30).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(0.1, 1.0, 2.0, 1.0, n).unwrap();
    let problem = VoltageProblem::new(
        params,
        grid,
        TargetProfile::Sine {
            p1: 1.0,
            p2: 0.2,
            p3: 0.0,
            f0: 6.0,
        },
        1e-4,
        BoxBounds::new(-1.0, 1.0).unwrap(),
    )
    .unwrap();

    let opts = QnOptions::default();
    let direct = direct_optimize_static(&problem, &opts).unwrap();
    let adjoint = adjoint_optimize_static(&problem, &opts).unwrap();

    // Same objective, same optimizer, gradients agreeing to truncation
    // error: the minimizers must essentially coincide.
    let gap = (&direct.control - &adjoint.control).amax();
    assert!(
        gap <= 1e-3,
        "direct and adjoint optima differ by {gap:.2e} in the ∞-norm"
    );
    let rel = (direct.objective.total - adjoint.objective.total).abs()
        / adjoint.objective.total.max(1e-12);
    assert!(rel <= 1e-6, "objective totals differ by {rel:.2e}");

    // The adjoint pays one forward and one backward per evaluation; the
    // direct method pays n + 1 forwards. The counters must reflect that.
    assert_eq!(
        adjoint.stats.forward_rollouts,
        adjoint.stats.backward_sweeps + 1,
        "adjoint run: one extra rollout re-evaluates the final iterate"
    );
    assert!(direct.stats.forward_rollouts >= (n + 1) * direct.qn.evaluations);
    assert_eq!(direct.stats.backward_sweeps, 0);
    assert!(direct.control.iter().all(|&u| u.abs() <= 1.0 + 1e-9));
}

#[test]
fn nmpc_tracks_a_reachable_burgers_target() {
    let n = 17;
    let grid = SpaceTimeGrid::new(1.0, n, 0.6, 24).unwrap();
    let params = BurgersParams::new(0.05).unwrap();
    let basis = BasisSet::new(BasisKind::Sine, 3, 1.0).unwrap();
    let problem = BurgersProblem::new(
        params,
        grid.clone(),
        basis.clone(),
        TargetProfile::Parabola(1.2),
        1e-3,
        BoxBounds::new(-1.0, 1.0).unwrap(),
    );

    let run = nmpc_control(&problem, 6, &QnOptions::default()).unwrap();

    assert_eq!(run.weights.nrows(), grid.steps());
    assert!(run.weights.iter().all(|&w| w.abs() <= 1.0 + 1e-9));
    assert!(run.stats.forward_rollouts > grid.steps());
    assert!(run.stats.backward_sweeps > 0);

    let controlled = terminal_mse(&run.trajectory, &problem.target);
    let free = {
        let traj = rollout_burgers(
            &problem.initial,
            &DMatrix::zeros(grid.steps(), 3),
            &basis,
            &problem.params,
            &grid,
        )
        .unwrap();
        terminal_mse(&traj, &problem.target)
    };
    assert!(
        controlled < 0.05 * free,
        "NMPC terminal MSE {controlled:.3e} vs free MSE {free:.3e}"
    );

    // The stored trajectory must be the true closed-loop rollout of the
    // applied weights.
    let replay = rollout_burgers(
        &problem.initial,
        &run.weights,
        &basis,
        &problem.params,
        &grid,
    )
    .unwrap();
    let drift = (replay.values() - run.trajectory.values()).amax();
    assert!(
        drift <= 1e-12,
        "closed-loop trajectory drifts by {drift:.2e}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The quadratic weights derived from the reporting objective scale
    /// linearly with the grid measures for any admissible weight pair.
    #[test]
    fn objective_quad_weights_scale_with_the_grid(
        lambda in 0.0..4.0f64,
        gamma in 0.0..0.1f64,
        n in 5usize..40,
        steps in 2usize..50,
    ) {
        let grid = SpaceTimeGrid::new(1.0, n, 1.0, steps).unwrap();
        let w = ObjectiveWeights::new(lambda, gamma).unwrap();
        let quad = QuadWeights::from_objective(&grid, &w, 3);
        prop_assert!(quad.q.iter().all(|&v| (v - grid.dx()).abs() < 1e-15));
        prop_assert!(quad
            .t_q
            .iter()
            .all(|&v| (v - lambda * grid.dx() * grid.dt()).abs() < 1e-15));
        prop_assert!(quad.r.iter().all(|&v| (v - gamma * grid.dt()).abs() < 1e-15));
    }

    /// LMPC outputs stay inside an arbitrary symmetric box and always fill
    /// exactly one weight row per time step.
    #[test]
    fn lmpc_respects_arbitrary_boxes(bound in 0.01..0.6f64, horizon in 1usize..9) {
        let problem = small_heat_problem(bound);
        let cfg = MpcConfig::new(horizon, problem.quad_weights(), problem.bounds.clone());
        let run = lmpc_control(&problem, &cfg).unwrap();
        prop_assert_eq!(run.weights.nrows(), problem.grid.steps());
        prop_assert!(run.weights.iter().all(|&w| w.abs() <= bound + 1e-9));
    }
}
