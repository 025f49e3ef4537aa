//! Running a trained policy: surrogate-in-the-loop evaluation and true-plant
//! deployment.
//!
//! At deployment the surrogate is out of the picture — the controller sees
//! the *true* plant state at each step (a static controller is called once
//! up front). The surrogate-in-the-loop variant mirrors the training
//! rollout and exists for evaluation and tests.

use nalgebra::{DMatrix, DVector};
use oclab_core::{SpaceTimeGrid, StateTrajectory};

use crate::controller::SurrogateController;
use crate::error::NeuralError;
use crate::operator::OperatorNet;
use crate::pdeop::Plant;

/// A policy rollout with the emitted controls and resulting trajectory.
#[derive(Debug, Clone)]
pub struct Deployment {
    /// `1×n` profile for a static controller, `steps×M` weights otherwise.
    pub controls: DMatrix<f64>,
    pub trajectory: StateTrajectory,
    pub controller_calls: usize,
}

/// Applies the trained controller to the true plant in closed loop.
pub fn deploy_policy(
    controller: &SurrogateController,
    plant: &Plant,
    grid: &SpaceTimeGrid,
    y0: &DVector<f64>,
    target: &DVector<f64>,
) -> Result<Deployment, NeuralError> {
    let steps = grid.steps();
    let n = grid.n();
    let mut states = DMatrix::zeros(steps + 1, n);
    let mut y = y0.clone();
    for j in 0..n {
        states[(0, j)] = y[j];
    }

    let (controls, controller_calls) = if controller.is_recurrent() {
        let m = controller.output_dim();
        let mut controls = DMatrix::zeros(steps, m);
        let mut hidden = controller.zero_state_plain();
        for k in 0..steps {
            let c = controller.step_plain(y.as_slice(), target.as_slice(), &mut hidden);
            for (j, v) in c.iter().enumerate() {
                controls[(k, j)] = *v;
            }
            y = plant.true_step(&y, &DVector::from_column_slice(&c))?;
            for j in 0..n {
                states[(k + 1, j)] = y[j];
            }
        }
        (controls, steps)
    } else {
        let u = controller.forward_static_plain(y0.as_slice(), target.as_slice());
        let u_vec = DVector::from_column_slice(&u);
        for k in 0..steps {
            y = plant.true_step(&y, &u_vec)?;
            for j in 0..n {
                states[(k + 1, j)] = y[j];
            }
        }
        (DMatrix::from_row_slice(1, n, &u), 1)
    };

    let trajectory = StateTrajectory::new(grid.clone(), states)?;
    Ok(Deployment {
        controls,
        trajectory,
        controller_calls,
    })
}

/// Closed-loop rollout of controller and *surrogate* without a tape — the
/// plain-arithmetic mirror of the training rollout. Returns the state table,
/// the controls, and the (controller, operator) call counts.
pub fn surrogate_rollout_plain(
    controller: &SurrogateController,
    operator: &OperatorNet,
    trunk_features: &DMatrix<f64>,
    y0: &[f64],
    target: &[f64],
    steps: usize,
) -> (DMatrix<f64>, DMatrix<f64>, usize, usize) {
    let n = operator.state_dim();
    let mut states = DMatrix::zeros(steps + 1, n);
    let mut y = y0.to_vec();
    for j in 0..n {
        states[(0, j)] = y[j];
    }

    if controller.is_recurrent() {
        let m = controller.output_dim();
        let mut controls = DMatrix::zeros(steps, m);
        let mut hidden = controller.zero_state_plain();
        for k in 0..steps {
            let c = controller.step_plain(&y, target, &mut hidden);
            for (j, v) in c.iter().enumerate() {
                controls[(k, j)] = *v;
            }
            y = operator.step_plain(trunk_features, &y, &c);
            for j in 0..n {
                states[(k + 1, j)] = y[j];
            }
        }
        (states, controls, steps, steps)
    } else {
        let u = controller.forward_static_plain(y0, target);
        for k in 0..steps {
            y = operator.step_plain(trunk_features, &y, &u);
            for j in 0..n {
                states[(k + 1, j)] = y[j];
            }
        }
        let controls = DMatrix::from_row_slice(1, n, &u);
        (states, controls, 1, steps)
    }
}
