//! Runs one experiment end-to-end: builds the problem, synthesizes the
//! control with the configured method, and reports metrics plus solver-call
//! counts.
//!
//! The wall time covers the synthesis phase only — the optimizer loop of a
//! classical method, or the closed-loop rollout of the trained controller
//! (its network forwards interleaved with the true plant steps it feeds
//! back). Checkpoint loading, dataset generation, and training are pipeline
//! work and are never part of a `ResultRecord`.

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use oclab_control::{
    adjoint_optimize_static, burgers_adjoint_gradient, direct_optimize_static,
    heat_adjoint_control, lmpc_control, nmpc_control, BurgersProblem, MpcConfig, SolveStats,
    StaticRun, WeightedRun,
};
use oclab_core::{
    objective_value, ControlField, Objective, ObjectiveWeights, StateTrajectory, TargetProfile,
};
use oclab_optim::{qn_minimize_box, BoxConstraints, QnOptions};
use oclab_solvers::{rollout_burgers, rollout_linear};
use oclab_neural::{deploy_policy, load_controller, Plant};

use crate::artifacts::ArtifactPaths;
use crate::config::ResolvedConfig;
use crate::error::BenchError;
use crate::record::ResultRecord;
use crate::systems::{burgers_problem, heat_problem, voltage_problem, MethodId, SystemId};

/// A finished run: the persisted record plus the profiles a caller needs
/// for overlay plots.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: ResultRecord,
    /// Spatial nodes.
    pub xs: Vec<f64>,
    /// Target profile at the nodes.
    pub target: DVector<f64>,
    /// Achieved terminal state.
    pub terminal: DVector<f64>,
}

fn qn_options(max_iters: usize) -> QnOptions {
    QnOptions {
        max_iters,
        ..QnOptions::default()
    }
}

/// Open-loop adjoint baseline for Burgers: all weight rows optimized at
/// once against the full-horizon cost, one forward rollout and one backward
/// sweep per iterate.
fn burgers_open_loop_optimize(
    problem: &BurgersProblem,
    opts: &QnOptions,
) -> Result<WeightedRun, BenchError> {
    let grid = &problem.grid;
    let steps = grid.steps();
    let modes = problem.basis.modes();
    let target = problem.target.evaluate(grid);
    let mut stats = SolveStats::new();

    let box_c = BoxConstraints::uniform(
        steps * modes,
        problem.bounds.lower(),
        problem.bounds.upper(),
    )?;
    let qn = qn_minimize_box(
        |z| {
            let w = DMatrix::from_fn(steps, modes, |r, c| z[r * modes + c]);
            match burgers_adjoint_gradient(
                &problem.initial,
                &w,
                &problem.basis,
                &problem.params,
                grid,
                &target,
                problem.alpha_effort,
                &mut stats,
            ) {
                Ok((cost, grad)) => {
                    let g = DVector::from_fn(steps * modes, |i, _| grad[(i / modes, i % modes)]);
                    (cost, g)
                }
                // A diverged Newton solve at a trial point: infinite cost
                // makes the line search back off.
                Err(_) => (f64::INFINITY, DVector::zeros(steps * modes)),
            }
        },
        &DVector::zeros(steps * modes),
        &box_c,
        opts,
    )?;
    let weights = DMatrix::from_fn(steps, modes, |r, c| qn.x[r * modes + c]);

    let trajectory = rollout_burgers(&problem.initial, &weights, &problem.basis, &problem.params, grid)?;
    stats.forward_rollouts += 1;
    let control = ControlField::Weighted {
        weights: weights.clone(),
        basis: problem.basis.clone(),
    };
    let reporting = ObjectiveWeights::new(1.0, problem.alpha_effort)?;
    let objective = objective_value(&trajectory, &control, &problem.target, &reporting)?;
    Ok(WeightedRun {
        weights,
        trajectory,
        objective,
        stats,
    })
}

struct Synthesis {
    trajectory: StateTrajectory,
    objective: Objective,
    stats: SolveStats,
    wall_s: f64,
}

fn from_static(run: StaticRun, wall_s: f64) -> Synthesis {
    Synthesis {
        trajectory: run.trajectory,
        objective: run.objective,
        stats: run.stats,
        wall_s,
    }
}

fn from_weighted(run: WeightedRun, wall_s: f64) -> Synthesis {
    Synthesis {
        trajectory: run.trajectory,
        objective: run.objective,
        stats: run.stats,
        wall_s,
    }
}

fn deploy_pdeop(
    cfg: &ResolvedConfig,
    target_profile: &TargetProfile,
    artifacts: &ArtifactPaths,
) -> Result<Synthesis, BenchError> {
    let system = cfg.system;
    let ckpt = artifacts.controller(system);
    if !ckpt.exists() {
        return Err(BenchError::MissingArtifact(ckpt));
    }
    let (controller, _) = load_controller(&ckpt)?;
    let grid = system.grid(cfg.n, cfg.steps)?;
    let target = target_profile.evaluate(&grid);
    let y0 = DVector::zeros(cfg.n);

    // Assemble the plant outside the timed phase.
    let linear_op = match system {
        SystemId::Voltage => Some(voltage_problem(cfg.target, cfg.n, cfg.steps)?.operator()?),
        SystemId::Heat => Some(heat_problem(cfg.target, cfg.n, cfg.steps)?.operator()?),
        SystemId::Burgers => None,
    };
    let burgers_params = system.burgers_params();
    let basis = system.basis();
    let plant = match system {
        SystemId::Voltage | SystemId::Heat => Plant::Linear(linear_op.as_ref().expect("linear")),
        SystemId::Burgers => Plant::Burgers {
            params: burgers_params.as_ref().expect("burgers"),
            basis: basis.as_ref().expect("weighted"),
            grid: &grid,
        },
    };

    let start = Instant::now();
    let deployment = deploy_policy(&controller, &plant, &grid, &y0, &target)?;
    let wall_s = start.elapsed().as_secs_f64();

    let control = match system.basis() {
        None => ControlField::Static(deployment.controls.row(0).transpose()),
        Some(basis) => ControlField::Weighted {
            weights: deployment.controls.clone(),
            basis,
        },
    };
    let reporting = system.objective_weights();
    let objective = objective_value(&deployment.trajectory, &control, target_profile, &reporting)?;
    // Every true plant advance during deployment is one forward solve; the
    // policy never calls a backward solver.
    let stats = SolveStats {
        forward_rollouts: cfg.steps,
        backward_sweeps: 0,
    };
    Ok(Synthesis {
        trajectory: deployment.trajectory,
        objective,
        stats,
        wall_s,
    })
}

/// Runs the experiment described by `cfg` and returns the record plus the
/// plotting profiles. Pure compute: callers decide what to persist.
pub fn run_experiment(
    cfg: &ResolvedConfig,
    artifacts: &ArtifactPaths,
) -> Result<RunOutcome, BenchError> {
    let system = cfg.system;
    let target_profile = system.target_profile(cfg.target)?;

    let synthesis = match (system, cfg.method) {
        (SystemId::Voltage, MethodId::Direct) => {
            let problem = voltage_problem(cfg.target, cfg.n, cfg.steps)?;
            let start = Instant::now();
            let run = direct_optimize_static(&problem, &qn_options(cfg.max_iters))?;
            from_static(run, start.elapsed().as_secs_f64())
        }
        (SystemId::Voltage, MethodId::Adjoint) => {
            let problem = voltage_problem(cfg.target, cfg.n, cfg.steps)?;
            let start = Instant::now();
            let run = adjoint_optimize_static(&problem, &qn_options(cfg.max_iters))?;
            from_static(run, start.elapsed().as_secs_f64())
        }
        (SystemId::Heat, MethodId::Lmpc) => {
            let problem = heat_problem(cfg.target, cfg.n, cfg.steps)?;
            let horizon = cfg.horizon.expect("receding method");
            let mpc = MpcConfig::new(horizon, problem.quad_weights(), problem.bounds.clone());
            let start = Instant::now();
            let run = lmpc_control(&problem, &mpc)?;
            from_weighted(run, start.elapsed().as_secs_f64())
        }
        (SystemId::Heat, MethodId::Adjoint) => {
            let problem = heat_problem(cfg.target, cfg.n, cfg.steps)?;
            let horizon = cfg.horizon.expect("receding method");
            let mpc = MpcConfig::new(horizon, problem.quad_weights(), problem.bounds.clone())
                .with_inner_iters(cfg.max_iters);
            let start = Instant::now();
            let run = heat_adjoint_control(&problem, &mpc)?;
            from_weighted(run, start.elapsed().as_secs_f64())
        }
        (SystemId::Burgers, MethodId::Nmpc) => {
            let problem = burgers_problem(cfg.target, cfg.n, cfg.steps)?;
            let horizon = cfg.horizon.expect("receding method");
            let start = Instant::now();
            let run = nmpc_control(&problem, horizon, &qn_options(cfg.max_iters))?;
            from_weighted(run, start.elapsed().as_secs_f64())
        }
        (SystemId::Burgers, MethodId::Adjoint) => {
            let problem = burgers_problem(cfg.target, cfg.n, cfg.steps)?;
            let start = Instant::now();
            let run = burgers_open_loop_optimize(&problem, &qn_options(cfg.max_iters))?;
            from_weighted(run, start.elapsed().as_secs_f64())
        }
        (_, MethodId::Pdeop) => deploy_pdeop(cfg, &target_profile, artifacts)?,
        (system, method) => {
            return Err(BenchError::MethodSystem {
                method: method.to_string(),
                system: system.to_string(),
            })
        }
    };

    let grid = system.grid(cfg.n, cfg.steps)?;
    let target = target_profile.evaluate(&grid);
    let terminal = synthesis.trajectory.terminal();
    let mse = (&terminal - &target).norm_squared() / cfg.n as f64;

    let record = ResultRecord {
        timestamp: ResultRecord::now(),
        config_hash: cfg.hash(),
        system,
        method: cfg.method,
        target: cfg.target,
        mse,
        obj_terminal: synthesis.objective.terminal,
        obj_running: synthesis.objective.running,
        obj_effort: synthesis.objective.effort,
        wall_s: synthesis.wall_s,
        forward_solves: synthesis.stats.forward_rollouts,
        backward_solves: synthesis.stats.backward_sweeps,
        provenance: ResultRecord::provenance_string(cfg.seed),
    };
    Ok(RunOutcome {
        record,
        xs: grid.xs().to_vec(),
        target,
        terminal,
    })
}

/// Terminal state of the uncontrolled plant — the reference point for "did
/// the controller do anything".
pub fn free_terminal(system: SystemId, n: usize, steps: usize) -> Result<DVector<f64>, BenchError> {
    let grid = system.grid(n, steps)?;
    let y0 = DVector::zeros(n);
    match system {
        SystemId::Voltage => {
            let problem = voltage_problem(crate::systems::TargetId::Constant, n, steps)?;
            let op = problem.operator()?;
            let traj = rollout_linear(&op, &y0, &ControlField::Static(DVector::zeros(n)))?;
            Ok(traj.terminal())
        }
        SystemId::Heat => {
            let problem = heat_problem(crate::systems::TargetId::Constant, n, steps)?;
            let op = problem.operator()?;
            let modes = problem.basis.modes();
            let mut y = y0;
            for _ in 0..steps {
                y = op.step(&y, &DVector::zeros(modes));
            }
            Ok(y)
        }
        SystemId::Burgers => {
            let basis = system.basis().expect("weighted");
            let params = system.burgers_params().expect("burgers");
            let traj = rollout_burgers(
                &y0,
                &DMatrix::zeros(steps, basis.modes()),
                &basis,
                &params,
                &grid,
            )?;
            Ok(traj.terminal())
        }
    }
}
