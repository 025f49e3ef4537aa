//! Finite-difference oracles for the discrete-adjoint gradients, plus the
//! exact solver-call accounting each method advertises.

use nalgebra::{DMatrix, DVector};
use oclab_control::{
    adjoint_gradient_static, burgers_adjoint_gradient, burgers_horizon_objective,
    direct_gradient_static, heat_adjoint_gradient, BurgersProblem, HeatProblem, QuadWeights,
    SolveStats, VoltageProblem,
};
use oclab_core::{
    objective_value, BasisKind, BasisSet, BoxBounds, ControlField, ObjectiveWeights, SpaceTimeGrid,
    TargetProfile,
};
use oclab_optim::{fd_gradient, FdScheme};
use oclab_solvers::{rollout_linear, BurgersParams, CnOperator, ReactionDiffusionParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_gap(got: &DVector<f64>, want: &DVector<f64>) -> f64 {
    let denom = want.amax().max(1e-12);
    (got - want).amax() / denom
}

fn random_target(rng: &mut ChaCha8Rng) -> TargetProfile {
    match rng.gen_range(0..3) {
        0 => TargetProfile::Constant(rng.gen_range(-1.0..1.0)),
        1 => TargetProfile::Ramp(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)),
        _ => TargetProfile::Sine {
            p1: rng.gen_range(-0.5..0.5),
            p2: rng.gen_range(0.1..0.5),
            p3: rng.gen_range(-0.5..0.5),
            f0: rng.gen_range(1.0..6.0),
        },
    }
}

fn random_voltage_problem(rng: &mut ChaCha8Rng) -> VoltageProblem {
    let n = rng.gen_range(7..=31);
    let steps = rng.gen_range(5..=30);
    let dt = rng.gen_range(0.02..0.1);
    let grid = SpaceTimeGrid::new(1.0, n, dt * steps as f64, steps).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(
        rng.gen_range(0.02..0.15),
        rng.gen_range(0.2..1.5),
        rng.gen_range(0.5..2.5),
        rng.gen_range(-0.5..0.5),
        n,
    )
    .unwrap();
    let target = random_target(rng);
    let gamma = rng.gen_range(0.0..0.01);
    VoltageProblem::new(
        params,
        grid,
        target,
        gamma,
        BoxBounds::new(-1.0, 1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn static_adjoint_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let problem = random_voltage_problem(&mut rng);
        let op = problem.operator().unwrap();
        let n = problem.grid.n();
        let u = DVector::from_fn(n, |_, _| rng.gen_range(-0.8..0.8));

        let mut stats = SolveStats::new();
        let (_, grad) = adjoint_gradient_static(&problem, &op, &u, &mut stats).unwrap();

        let mut scratch = SolveStats::new();
        let (fd, _) = fd_gradient(
            |v| problem.objective(&op, v, &mut scratch).unwrap().0.total,
            &u,
            &FdScheme::central().with_eta(1e-5),
        )
        .unwrap();

        let gap = rel_gap(&grad, &fd);
        assert!(
            gap <= 1e-5,
            "trial {trial}: static adjoint disagrees with central differences by {gap:.2e}"
        );
    }
}

#[test]
fn static_adjoint_has_the_analytic_one_step_form() {
    // One step, three nodes, no effort penalty: the objective is
    // Δx·‖y_1 − t‖² with y_1 = A_CN·y_0 + B·u + d, so the exact gradient is
    // +Bᵀ·2Δx·(y_1 − t). The sign is load-bearing: with the state above the
    // target and a non-negative input map, raising the control must raise
    // the cost.
    let grid = SpaceTimeGrid::new(1.0, 3, 0.05, 1).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(0.1, 1.0, 2.0, 0.5, 3).unwrap();
    let problem = VoltageProblem::new(
        params,
        grid,
        TargetProfile::Constant(-0.2),
        0.0,
        BoxBounds::new(-1.0, 1.0).unwrap(),
    )
    .unwrap();
    let op = problem.operator().unwrap();
    let u = DVector::from_vec(vec![0.3, -0.1, 0.2]);

    let y1 = op.step(&problem.initial, &u);
    let t = problem.target.evaluate(&problem.grid);
    let expected = op.b().transpose() * (2.0 * problem.grid.dx() * (&y1 - &t));

    let mut stats = SolveStats::new();
    let (cost, grad) = adjoint_gradient_static(&problem, &op, &u, &mut stats).unwrap();
    assert!((cost - problem.grid.dx() * (&y1 - &t).norm_squared()).abs() < 1e-14);
    assert!((&grad - &expected).amax() < 1e-13);
    // y_1 sits above the target everywhere and B has non-negative entries.
    assert!(grad.iter().all(|&g| g > 0.0));
}

#[test]
fn gradient_costs_are_exactly_as_advertised() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let problem = random_voltage_problem(&mut rng);
    let op = problem.operator().unwrap();
    let n = problem.grid.n();
    let u = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));

    let mut direct = SolveStats::new();
    direct_gradient_static(&problem, &op, &u, &mut direct).unwrap();
    assert_eq!(direct.forward_rollouts, n + 1);
    assert_eq!(direct.backward_sweeps, 0);

    let mut adjoint = SolveStats::new();
    adjoint_gradient_static(&problem, &op, &u, &mut adjoint).unwrap();
    assert_eq!(adjoint.forward_rollouts, 1);
    assert_eq!(adjoint.backward_sweeps, 1);

    let (heat_op, _, quad, _) = random_heat_instance(&mut rng);
    let horizon = 6;
    let w = DMatrix::from_fn(horizon, quad.r.len(), |_, _| rng.gen_range(-0.5..0.5));
    let y0 = DVector::zeros(heat_op.grid().n());
    let t = DVector::zeros(heat_op.grid().n());
    let mut heat_stats = SolveStats::new();
    heat_adjoint_gradient(&heat_op, &y0, &t, &w, &quad, &mut heat_stats);
    assert_eq!(heat_stats.forward_rollouts, 1);
    assert_eq!(heat_stats.backward_sweeps, 1);

    let (bp, hgrid) = random_burgers_instance(&mut rng, 5);
    let wb = DMatrix::from_fn(5, bp.basis.modes(), |_, _| rng.gen_range(-0.5..0.5));
    let tb = bp.target.evaluate(&hgrid);
    let mut b_stats = SolveStats::new();
    burgers_adjoint_gradient(
        &bp.initial,
        &wb,
        &bp.basis,
        &bp.params,
        &hgrid,
        &tb,
        bp.alpha_effort,
        &mut b_stats,
    )
    .unwrap();
    assert_eq!(b_stats.forward_rollouts, 1);
    assert_eq!(b_stats.backward_sweeps, 1);

    // Direct differences and the adjoint see the same objective, so the
    // values they report must agree.
    let mut s1 = SolveStats::new();
    let mut s2 = SolveStats::new();
    let (f_direct, _) = direct_gradient_static(&problem, &op, &u, &mut s1).unwrap();
    let (f_adjoint, _) = adjoint_gradient_static(&problem, &op, &u, &mut s2).unwrap();
    assert_eq!(f_direct, f_adjoint);
}

fn random_heat_instance(rng: &mut ChaCha8Rng) -> (CnOperator, HeatProblem, QuadWeights, BasisSet) {
    let n = rng.gen_range(7..=25);
    let steps = rng.gen_range(5..=20);
    let dt = rng.gen_range(0.02..0.08);
    let grid = SpaceTimeGrid::new(1.0, n, dt * steps as f64, steps).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(
        rng.gen_range(0.02..0.15),
        rng.gen_range(0.2..1.5),
        rng.gen_range(0.5..2.5),
        rng.gen_range(-0.5..0.5),
        n,
    )
    .unwrap();
    let modes = rng.gen_range(2..=5);
    let basis = BasisSet::new(BasisKind::Cosine, modes, 1.0).unwrap();
    let problem = HeatProblem::new(
        params,
        grid.clone(),
        basis.clone(),
        random_target(rng),
        ObjectiveWeights::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..0.01)).unwrap(),
        BoxBounds::new(-1.0, 1.0).unwrap(),
    );
    let quad = QuadWeights::new(
        DVector::from_fn(n, |_, _| rng.gen_range(0.0..2.0)),
        DVector::from_fn(n, |_, _| rng.gen_range(0.0..2.0)),
        DVector::from_fn(modes, |_, _| rng.gen_range(0.0..0.5)),
    )
    .unwrap();
    let op = problem.operator().unwrap();
    (op, problem, quad, basis)
}

/// Test-local forward evaluation of the quadratic horizon cost; the adjoint
/// is checked against finite differences of this independent accumulation.
fn heat_cost_by_stepping(
    op: &CnOperator,
    y0: &DVector<f64>,
    target: &DVector<f64>,
    w: &DMatrix<f64>,
    quad: &QuadWeights,
) -> f64 {
    let horizon = w.nrows();
    let mut y = y0.clone();
    let mut cost = 0.0;
    for j in 0..horizon {
        let c = w.row(j).transpose();
        y = op.step(&y, &c);
        let stage = if j + 1 < horizon { &quad.t_q } else { &quad.q };
        for i in 0..y.len() {
            cost += stage[i] * (y[i] - target[i]) * (y[i] - target[i]);
        }
        for m in 0..c.len() {
            cost += quad.r[m] * c[m] * c[m];
        }
    }
    cost
}

#[test]
fn heat_adjoint_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for trial in 0..20 {
        let (op, _, quad, _) = random_heat_instance(&mut rng);
        let n = op.grid().n();
        let modes = quad.r.len();
        let horizon = rng.gen_range(1..=10usize.min(op.grid().steps()));
        let y0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let target = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let w = DMatrix::from_fn(horizon, modes, |_, _| rng.gen_range(-0.8..0.8));

        let mut stats = SolveStats::new();
        let (cost, grad) = heat_adjoint_gradient(&op, &y0, &target, &w, &quad, &mut stats);
        assert!(
            (cost - heat_cost_by_stepping(&op, &y0, &target, &w, &quad)).abs()
                <= 1e-12 * cost.abs().max(1.0)
        );

        let flat = DVector::from_fn(horizon * modes, |i, _| w[(i / modes, i % modes)]);
        let (fd, _) = fd_gradient(
            |z| {
                let wz = DMatrix::from_fn(horizon, modes, |r, c| z[r * modes + c]);
                heat_cost_by_stepping(&op, &y0, &target, &wz, &quad)
            },
            &flat,
            &FdScheme::central().with_eta(1e-5),
        )
        .unwrap();
        let grad_flat = DVector::from_fn(horizon * modes, |i, _| grad[(i / modes, i % modes)]);

        let gap = rel_gap(&grad_flat, &fd);
        assert!(
            gap <= 1e-5,
            "trial {trial}: horizon adjoint disagrees with central differences by {gap:.2e}"
        );
    }
}

#[test]
fn heat_full_horizon_cost_equals_reporting_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let (op, problem, _, basis) = random_heat_instance(&mut rng);
        let steps = problem.grid.steps();
        let w = DMatrix::from_fn(steps, basis.modes(), |_, _| rng.gen_range(-0.8..0.8));
        let quad = problem.quad_weights();
        let target = problem.target.evaluate(&problem.grid);

        let mut stats = SolveStats::new();
        let (cost, _) =
            heat_adjoint_gradient(&op, &problem.initial, &target, &w, &quad, &mut stats);

        let control = ControlField::Weighted {
            weights: w.clone(),
            basis: basis.clone(),
        };
        let traj = rollout_linear(&op, &problem.initial, &control).unwrap();
        let obj = objective_value(&traj, &control, &problem.target, &problem.weights).unwrap();
        assert!(
            (cost - obj.total).abs() <= 1e-12 * obj.total.abs().max(1.0),
            "full-horizon quadratic cost {cost} != reporting objective {}",
            obj.total
        );
    }
}

fn random_burgers_instance(rng: &mut ChaCha8Rng, steps: usize) -> (BurgersProblem, SpaceTimeGrid) {
    let n = rng.gen_range(9..=21);
    let dt = rng.gen_range(0.01..0.03);
    let grid = SpaceTimeGrid::new(1.0, n, dt * steps as f64, steps).unwrap();
    let params = BurgersParams::new(rng.gen_range(0.02..0.1)).unwrap();
    let modes = rng.gen_range(2..=4);
    let basis = BasisSet::new(BasisKind::Sine, modes, 1.0).unwrap();
    let target = match rng.gen_range(0..3) {
        0 => TargetProfile::Constant(0.0),
        1 => TargetProfile::Parabola(rng.gen_range(0.5..2.0)),
        _ => TargetProfile::Sine {
            p1: 0.0,
            p2: rng.gen_range(0.2..0.8),
            p3: 0.0,
            f0: std::f64::consts::PI,
        },
    };
    let mut problem = BurgersProblem::new(
        params,
        grid.clone(),
        basis,
        target,
        rng.gen_range(0.0..0.01),
        BoxBounds::new(-1.0, 1.0).unwrap(),
    );
    // Smooth Dirichlet-compatible start.
    let amp = rng.gen_range(-0.5..0.5);
    let bump = rng.gen_range(-0.5..0.5);
    problem.initial = DVector::from_fn(n, |i, _| {
        let x = grid.xs()[i];
        amp * (std::f64::consts::PI * x).sin() + bump * x * (1.0 - x)
    });
    (problem, grid)
}

#[test]
fn burgers_adjoint_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for trial in 0..20 {
        let steps = rng.gen_range(3..=10);
        let (problem, grid) = random_burgers_instance(&mut rng, steps);
        let modes = problem.basis.modes();
        let target = problem.target.evaluate(&grid);
        let w = DMatrix::from_fn(steps, modes, |_, _| rng.gen_range(-0.8..0.8));

        let mut stats = SolveStats::new();
        let (cost, grad) = burgers_adjoint_gradient(
            &problem.initial,
            &w,
            &problem.basis,
            &problem.params,
            &grid,
            &target,
            problem.alpha_effort,
            &mut stats,
        )
        .unwrap();

        let flat = DVector::from_fn(steps * modes, |i, _| w[(i / modes, i % modes)]);
        // η = 1e−4: large enough that the 1e−10 Newton tolerance of the
        // forward solver stays far below the difference quotient.
        let (fd, _) = fd_gradient(
            |z| {
                let wz = DMatrix::from_fn(steps, modes, |r, c| z[r * modes + c]);
                let mut scratch = SolveStats::new();
                burgers_horizon_objective(
                    &problem.initial,
                    &wz,
                    &problem.basis,
                    &problem.params,
                    &grid,
                    &target,
                    problem.alpha_effort,
                    &mut scratch,
                )
                .unwrap()
            },
            &flat,
            &FdScheme::central().with_eta(1e-4),
        )
        .unwrap();
        let grad_flat = DVector::from_fn(steps * modes, |i, _| grad[(i / modes, i % modes)]);

        let gap = rel_gap(&grad_flat, &fd);
        assert!(
            gap <= 1e-4,
            "trial {trial}: Burgers adjoint disagrees with central differences by {gap:.2e}"
        );
        assert!(cost.is_finite() && cost >= 0.0);
    }
}

#[test]
fn gradients_vanish_in_equilibrium() {
    // Static control: uncontrolled dynamics settle toward the reference; with
    // the target set to the uncontrolled terminal profile and no effort
    // penalty, u = 0 is stationary.
    let grid = SpaceTimeGrid::new(1.0, 15, 1.0, 20).unwrap();
    let params = ReactionDiffusionParams::with_uniform_reference(0.1, 1.0, 2.0, 0.7, 15).unwrap();
    let mut problem = VoltageProblem::new(
        params,
        grid,
        TargetProfile::Constant(0.0),
        0.0,
        BoxBounds::new(-1.0, 1.0).unwrap(),
    )
    .unwrap();
    let op = problem.operator().unwrap();
    let free_terminal = {
        let mut s = SolveStats::new();
        let u0 = DVector::zeros(15);
        problem.objective(&op, &u0, &mut s).unwrap().1.terminal()
    };
    problem.target = TargetProfile::Constant(free_terminal[0]);
    let mut stats = SolveStats::new();
    let (_, grad) =
        adjoint_gradient_static(&problem, &op, &DVector::zeros(15), &mut stats).unwrap();
    assert!(
        grad.amax() < 1e-10,
        "stationary gradient is {:.2e}",
        grad.amax()
    );

    // Weighted control: start the heat system at its reference equilibrium
    // with the target equal to it; zero weights are stationary.
    let hgrid = SpaceTimeGrid::new(1.0, 15, 0.5, 10).unwrap();
    let hparams = ReactionDiffusionParams::with_uniform_reference(0.1, 0.5, 2.0, 0.4, 15).unwrap();
    let hproblem = HeatProblem::new(
        hparams,
        hgrid.clone(),
        BasisSet::new(BasisKind::Cosine, 4, 1.0).unwrap(),
        TargetProfile::Constant(0.4),
        ObjectiveWeights::new(1.0, 0.0).unwrap(),
        BoxBounds::new(-1.0, 1.0).unwrap(),
    );
    let hop = hproblem.operator().unwrap();
    let y_eq = DVector::from_element(15, 0.4);
    let t = hproblem.target.evaluate(&hgrid);
    let w = DMatrix::zeros(10, 4);
    let mut hstats = SolveStats::new();
    let (hcost, hgrad) =
        heat_adjoint_gradient(&hop, &y_eq, &t, &w, &hproblem.quad_weights(), &mut hstats);
    assert!(hcost < 1e-20);
    assert!(hgrad.amax() < 1e-10);

    // Burgers: rest state, zero target, zero weights — everything is exactly
    // zero, including the gradient.
    let bgrid = SpaceTimeGrid::new(1.0, 15, 0.2, 8).unwrap();
    let bparams = BurgersParams::new(0.05).unwrap();
    let bbasis = BasisSet::new(BasisKind::Sine, 3, 1.0).unwrap();
    let mut bstats = SolveStats::new();
    let (bcost, bgrad) = burgers_adjoint_gradient(
        &DVector::zeros(15),
        &DMatrix::zeros(8, 3),
        &bbasis,
        &bparams,
        &bgrid,
        &DVector::zeros(15),
        1e-3,
        &mut bstats,
    )
    .unwrap();
    assert_eq!(bcost, 0.0);
    assert_eq!(bgrad.amax(), 0.0);
}
