use nalgebra::{DMatrix, DVector};
use oclab_core::StateTrajectory;
use oclab_optim::{solve_box_qp, BoxConstraints};
use oclab_solvers::CnOperator;

use crate::error::ControlError;
use crate::heat::HeatProblem;
use crate::stats::SolveStats;
use crate::weights::{MpcConfig, WeightedRun};

/// Linear model-predictive controller for the reaction–diffusion system.
///
/// At every step the horizon cost is condensed onto the stacked weight
/// vector `z = [c_0; …; c_{H−1}]`: the predicted states are affine,
/// `y_j = f_j + Σ_{i<j} A_CN^{j−1−i}·B·c_i` with `f_j` the zero-control
/// prediction, so the cost is the convex quadratic
/// `zᵀ(GᵀWG + R_blk)z + 2·(GᵀW(f−t))ᵀz + const` over the box. The exact
/// box-QP solve replaces the quasi-Newton inner loop of the adjoint
/// controller; the first weight row of the minimizer is applied to the
/// plant (counted as a forward rollout — the prediction itself is matrix
/// algebra, not a solver call). No warm start is kept: the QP is solved to
/// stationarity every step, so previous solutions would not change the
/// answer.
pub fn lmpc_control(problem: &HeatProblem, cfg: &MpcConfig) -> Result<WeightedRun, ControlError> {
    let op = problem.operator()?;
    let grid = &problem.grid;
    let steps = grid.steps();
    let n = grid.n();
    let modes = problem.basis.modes();
    let target = problem.target.evaluate(grid);
    let mut stats = SolveStats::new();

    let mut y = problem.initial.clone();
    let mut states = DMatrix::zeros(steps + 1, n);
    states.row_mut(0).copy_from(&y.transpose());
    let mut applied = DMatrix::zeros(steps, modes);

    for s in 0..steps {
        let horizon = cfg.horizon.min(steps - s);
        let (p_mat, b_vec) = condense(&op, &y, &target, horizon, cfg)?;
        let box_c =
            BoxConstraints::uniform(horizon * modes, cfg.bounds.lower(), cfg.bounds.upper())?;
        // solve_box_qp minimizes ½·zᵀHz + qᵀz.
        let z = solve_box_qp(&(2.0 * p_mat), &(2.0 * b_vec), &box_c)
            .map_err(|e| ControlError::from(e).at_step(s))?;

        let c = DVector::from_fn(modes, |m, _| z[m]);
        applied.row_mut(s).copy_from(&c.transpose());
        y = op.step(&y, &c);
        stats.forward_rollouts += 1;
        states.row_mut(s + 1).copy_from(&y.transpose());
    }

    let trajectory = StateTrajectory::new(grid.clone(), states)?;
    let control = oclab_core::ControlField::Weighted {
        weights: applied.clone(),
        basis: problem.basis.clone(),
    };
    let objective =
        oclab_core::objective_value(&trajectory, &control, &problem.target, &problem.weights)?;
    Ok(WeightedRun {
        weights: applied,
        trajectory,
        objective,
        stats,
    })
}

/// Builds the condensed quadratic `zᵀPz + 2bᵀz` of the horizon cost.
///
/// `G` stacks the blocks `G[j−1, i] = A_CN^{j−1−i}·B` for `j = 1..H`,
/// `i < j`; `W` stacks the stage diagonals (`t_q` for `j < H`, `q` at the
/// horizon end); `f` stacks the zero-control predictions. Then
/// `P = GᵀWG + diag(r)⊗I_H` and `b = GᵀW(f − t)`.
fn condense(
    op: &CnOperator,
    y: &DVector<f64>,
    target: &DVector<f64>,
    horizon: usize,
    cfg: &MpcConfig,
) -> Result<(DMatrix<f64>, DVector<f64>), ControlError> {
    let n = y.len();
    let modes = op.b().ncols();
    let quad = &cfg.weights;

    // Powers A^i·B for i = 0..H−1.
    let mut powers = Vec::with_capacity(horizon);
    powers.push(op.b().clone());
    for i in 1..horizon {
        let next = op.a_cn() * &powers[i - 1];
        powers.push(next);
    }

    // Stacked prediction matrix and zero-control offsets f_j − t.
    let mut g = DMatrix::zeros(horizon * n, horizon * modes);
    let mut e = DVector::zeros(horizon * n);
    let mut f_j = y.clone();
    for j in 1..=horizon {
        f_j = op.a_cn() * f_j + op.d();
        let row0 = (j - 1) * n;
        e.rows_mut(row0, n).copy_from(&(&f_j - target));
        for i in 0..j {
            g.view_mut((row0, i * modes), (n, modes))
                .copy_from(&powers[j - 1 - i]);
        }
    }

    // Stage weights: t_q on intermediate rows, q at the horizon end.
    let mut w = DVector::zeros(horizon * n);
    for j in 1..=horizon {
        let stage = if j < horizon { &quad.t_q } else { &quad.q };
        w.rows_mut((j - 1) * n, n).copy_from(stage);
    }

    let wg = DMatrix::from_fn(horizon * n, horizon * modes, |r, c| w[r] * g[(r, c)]);
    let mut p_mat = g.transpose() * wg;
    for i in 0..horizon {
        for m in 0..modes {
            p_mat[(i * modes + m, i * modes + m)] += quad.r[m];
        }
    }
    let b_vec = g.transpose() * w.component_mul(&e);
    Ok((p_mat, b_vec))
}
