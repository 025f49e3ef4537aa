use nalgebra::{DMatrix, DVector};
use oclab_core::{evaluate_basis, BasisSet, CoreError, SpaceTimeGrid, StateTrajectory};

use crate::error::SolverError;
use crate::tridiag::Tridiag;

/// Newton tolerance on the ∞-norm of the Crank–Nicolson residual.
const NEWTON_TOL: f64 = 1e-10;
/// Newton iteration cap per implicit step.
const NEWTON_MAX_ITERS: usize = 25;

/// Coefficients of the viscous Burgers dynamics
/// `∂y/∂t = −y·∂y/∂x + ν·∂²y/∂x² + u(t, x)` with homogeneous Dirichlet
/// boundaries `y(t, 0) = y(t, L) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    /// Viscosity `ν > 0`.
    pub viscosity: f64,
}

impl BurgersParams {
    pub fn new(viscosity: f64) -> Result<Self, CoreError> {
        if !(viscosity.is_finite() && viscosity > 0.0) {
            return Err(CoreError::Config(format!(
                "viscosity must be finite and positive, got {viscosity}"
            )));
        }
        Ok(Self { viscosity })
    }
}

/// Semi-discrete right-hand side `f(y) = −y∘(D₁y) + ν·(D₂y) + forcing`.
///
/// `D₁` is the central first difference and `D₂` the second difference,
/// both on interior nodes only; the Dirichlet endpoints are pinned, so
/// `f[0] = f[n−1] = 0`.
pub fn burgers_semidiscrete_residual(
    y: &DVector<f64>,
    forcing: &DVector<f64>,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
) -> DVector<f64> {
    let n = grid.n();
    assert_eq!(y.len(), n, "state length mismatch");
    assert_eq!(forcing.len(), n, "forcing length mismatch");
    let dx = grid.dx();
    let nu = params.viscosity;
    let mut f = DVector::zeros(n);
    for i in 1..n - 1 {
        let dy = (y[i + 1] - y[i - 1]) / (2.0 * dx);
        let d2y = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dx * dx);
        f[i] = -y[i] * dy + nu * d2y + forcing[i];
    }
    f
}

/// Analytic Jacobian `J(y) = −(diag(D₁y) + diag(y)·D₁) + ν·D₂` of the
/// semi-discrete right-hand side, as a tridiagonal matrix with zero
/// boundary rows (the pinned endpoints contribute nothing).
pub fn burgers_jacobian(y: &DVector<f64>, params: &BurgersParams, grid: &SpaceTimeGrid) -> Tridiag {
    let n = grid.n();
    let dx = grid.dx();
    let nu = params.viscosity;
    let inv2dx = 1.0 / (2.0 * dx);
    let invdx2 = 1.0 / (dx * dx);
    let mut sub = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n - 1];
    for i in 1..n - 1 {
        let dy = (y[i + 1] - y[i - 1]) * inv2dx;
        // ∂f_i/∂y_{i−1}, ∂f_i/∂y_i, ∂f_i/∂y_{i+1}
        sub[i - 1] = y[i] * inv2dx + nu * invdx2;
        diag[i] = -dy - 2.0 * nu * invdx2;
        sup[i] = -y[i] * inv2dx + nu * invdx2;
    }
    Tridiag { sub, diag, sup }
}

/// Newton system matrix `I − Δt/2·J(y)` with identity rows at the pinned
/// Dirichlet endpoints.
///
/// This is the exact linearization of one implicit step with respect to its
/// *outgoing* state, which makes it the system matrix of the discrete
/// adjoint sweep as well.
pub fn newton_matrix(y: &DVector<f64>, params: &BurgersParams, grid: &SpaceTimeGrid) -> Tridiag {
    let n = grid.n();
    let half_dt = 0.5 * grid.dt();
    let mut m = burgers_jacobian(y, params, grid);
    for i in 0..n {
        m.diag[i] = 1.0 - half_dt * m.diag[i];
    }
    for i in 0..n - 1 {
        m.sub[i] *= -half_dt;
        m.sup[i] *= -half_dt;
    }
    // Boundary rows are already identity: the Jacobian has zero boundary
    // rows, so diag = 1 and both off-diagonals vanished above.
    m
}

/// One implicit Crank–Nicolson step of the Burgers dynamics under the
/// spatial forcing `Φ·weights` held for the whole step.
///
/// Solves `R(y⁺) = y⁺ − y − Δt/2·(f(y⁺) + f(y)) = 0` by Newton iteration
/// warm-started at `y`, with the analytic tridiagonal Jacobian and a
/// half-step fallback when an update would increase the residual. Dirichlet
/// endpoints are re-imposed after every update. Converges when the residual
/// ∞-norm drops below 1e−10; more than 25 iterations is an error carrying
/// the last residual norm.
pub fn step_burgers(
    y: &DVector<f64>,
    weights: &DVector<f64>,
    basis: &BasisSet,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
) -> Result<DVector<f64>, SolverError> {
    let phi = evaluate_basis(basis, grid)?;
    if weights.len() != basis.modes() {
        return Err(CoreError::DimensionMismatch {
            what: "forcing weights",
            expected: basis.modes(),
            got: weights.len(),
        }
        .into());
    }
    let forcing = &phi * weights;
    step_burgers_forced(y, &forcing, params, grid)
}

/// [`step_burgers`] with the spatial forcing vector already assembled.
pub(crate) fn step_burgers_forced(
    y: &DVector<f64>,
    forcing: &DVector<f64>,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
) -> Result<DVector<f64>, SolverError> {
    let n = grid.n();
    let half_dt = 0.5 * grid.dt();
    let f_old = burgers_semidiscrete_residual(y, forcing, params, grid);

    let residual = |y_next: &DVector<f64>| -> DVector<f64> {
        let f_new = burgers_semidiscrete_residual(y_next, forcing, params, grid);
        let mut r = y_next - y - half_dt * (&f_new + &f_old);
        // Pinned endpoints: the unknowns there are the values themselves.
        r[0] = y_next[0];
        r[n - 1] = y_next[n - 1];
        r
    };

    let mut y_next = y.clone();
    y_next[0] = 0.0;
    y_next[n - 1] = 0.0;
    let mut r = residual(&y_next);
    let mut r_norm = r.amax();

    for _ in 0..NEWTON_MAX_ITERS {
        if r_norm <= NEWTON_TOL {
            return Ok(y_next);
        }
        let m = newton_matrix(&y_next, params, grid);
        let mut delta = m.solve(&r)?;
        // Half-step fallback: shrink the update while it makes things worse.
        let mut trial = &y_next - &delta;
        trial[0] = 0.0;
        trial[n - 1] = 0.0;
        let mut r_trial = residual(&trial);
        let mut backtracks = 0;
        while r_trial.amax() > r_norm && backtracks < 6 {
            delta *= 0.5;
            trial = &y_next - &delta;
            trial[0] = 0.0;
            trial[n - 1] = 0.0;
            r_trial = residual(&trial);
            backtracks += 1;
        }
        y_next = trial;
        r = r_trial;
        r_norm = r.amax();
    }
    if r_norm <= NEWTON_TOL {
        Ok(y_next)
    } else {
        Err(SolverError::NewtonDiverged {
            iters: NEWTON_MAX_ITERS,
            residual: r_norm,
        })
    }
}

/// Rolls the Burgers dynamics forward from `y0` under a trajectory of basis
/// weights.
///
/// Row `k` of `weights` is held constant over `[t_k, t_{k+1})` (left
/// endpoint convention — the same convention the dataset generator and the
/// predictive controllers use). A matrix with `N_t + 1` rows is accepted;
/// the final row is then unused.
pub fn rollout_burgers(
    y0: &DVector<f64>,
    weights: &DMatrix<f64>,
    basis: &BasisSet,
    params: &BurgersParams,
    grid: &SpaceTimeGrid,
) -> Result<StateTrajectory, SolverError> {
    let n = grid.n();
    let steps = grid.steps();
    if y0.len() != n {
        return Err(CoreError::DimensionMismatch {
            what: "initial state",
            expected: n,
            got: y0.len(),
        }
        .into());
    }
    if weights.nrows() != steps && weights.nrows() != steps + 1 {
        return Err(CoreError::DimensionMismatch {
            what: "weight trajectory rows",
            expected: steps,
            got: weights.nrows(),
        }
        .into());
    }
    if weights.ncols() != basis.modes() {
        return Err(CoreError::DimensionMismatch {
            what: "weight trajectory columns",
            expected: basis.modes(),
            got: weights.ncols(),
        }
        .into());
    }
    let phi = evaluate_basis(basis, grid)?;
    let mut values = DMatrix::zeros(steps + 1, n);
    values.row_mut(0).copy_from(&y0.transpose());
    let mut y = y0.clone();
    for k in 0..steps {
        let forcing = &phi * weights.row(k).transpose();
        y = step_burgers_forced(&y, &forcing, params, grid)?;
        values.row_mut(k + 1).copy_from(&y.transpose());
    }
    StateTrajectory::new(grid.clone(), values).map_err(Into::into)
}

#[cfg(test)]
mod tests {
    use super::*;
    use oclab_core::BasisKind;

    #[test]
    fn rest_state_stays_at_rest() {
        let grid = SpaceTimeGrid::new(1.0, 21, 1.0, 20).unwrap();
        let params = BurgersParams::new(0.03).unwrap();
        let basis = BasisSet::new(BasisKind::Sine, 4, 1.0).unwrap();
        let y0 = DVector::zeros(21);
        let traj = rollout_burgers(&y0, &DMatrix::zeros(20, 4), &basis, &params, &grid).unwrap();
        assert!(traj.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn zero_state_residual_is_forcing_on_interior() {
        let grid = SpaceTimeGrid::new(1.0, 11, 1.0, 10).unwrap();
        let params = BurgersParams::new(0.1).unwrap();
        let g = DVector::from_fn(11, |i, _| 0.3 + 0.1 * i as f64);
        let f = burgers_semidiscrete_residual(&DVector::zeros(11), &g, &params, &grid);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[10], 0.0);
        for i in 1..10 {
            assert_eq!(f[i], g[i]);
        }
    }
}
