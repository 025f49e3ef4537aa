use nalgebra::{DMatrix, DVector};
use oclab_core::{
    BoxBounds, CoreError, Objective, ObjectiveWeights, SpaceTimeGrid, StateTrajectory,
};
use oclab_optim::QnOptions;

use crate::stats::SolveStats;

/// Diagonal quadratic-form weights of a finite-horizon tracking cost
///
/// `Σ_{j=1}^{H−1} (y_j−t)ᵀ diag(t_q) (y_j−t) + (y_H−t)ᵀ diag(q) (y_H−t)
///  + Σ_{j=0}^{H−1} c_jᵀ diag(r) c_j`.
///
/// The current state `y_0` never enters (it is not a decision variable), and
/// the horizon-terminal state takes `q` instead of `t_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadWeights {
    /// Terminal state weight diagonal (length `n`).
    pub q: DVector<f64>,
    /// Running state weight diagonal (length `n`).
    pub t_q: DVector<f64>,
    /// Control effort weight diagonal (length `M`).
    pub r: DVector<f64>,
}

impl QuadWeights {
    /// Validates that every diagonal entry is finite and non-negative.
    pub fn new(q: DVector<f64>, t_q: DVector<f64>, r: DVector<f64>) -> Result<Self, CoreError> {
        if q.len() != t_q.len() {
            return Err(CoreError::DimensionMismatch {
                what: "running weight diagonal",
                expected: q.len(),
                got: t_q.len(),
            });
        }
        for (name, v) in [("q", &q), ("t_q", &t_q), ("r", &r)] {
            if v.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(CoreError::Config(format!(
                    "weight diagonal {name} must be finite and non-negative"
                )));
            }
        }
        Ok(Self { q, t_q, r })
    }

    /// The weights that make the full-horizon quadratic cost equal the
    /// reporting objective: `q = Δx·1`, `t_q = λ_run·Δx·Δt·1`,
    /// `r = γ·Δt·1`.
    pub fn from_objective(grid: &SpaceTimeGrid, weights: &ObjectiveWeights, modes: usize) -> Self {
        let n = grid.n();
        Self {
            q: DVector::from_element(n, grid.dx()),
            t_q: DVector::from_element(n, weights.lambda_run * grid.dx() * grid.dt()),
            r: DVector::from_element(modes, weights.gamma * grid.dt()),
        }
    }
}

/// Receding-horizon controller configuration.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    /// Prediction horizon `N_p ≥ 1` (shrinks near the end of the run).
    pub horizon: usize,
    /// Quadratic stage/terminal weights of the horizon cost.
    pub weights: QuadWeights,
    /// Box on every control weight.
    pub bounds: BoxBounds,
    /// Inner optimizer budget for the quasi-Newton-based controllers
    /// (ignored by the QP-based LMPC).
    pub inner: QnOptions,
}

impl MpcConfig {
    pub fn new(horizon: usize, weights: QuadWeights, bounds: BoxBounds) -> Self {
        assert!(horizon >= 1, "prediction horizon must be at least 1");
        Self {
            horizon,
            weights,
            bounds,
            inner: QnOptions {
                max_iters: 20,
                ..QnOptions::default()
            },
        }
    }

    /// Replaces the inner optimizer iteration cap.
    pub fn with_inner_iters(mut self, iters: usize) -> Self {
        self.inner.max_iters = iters;
        self
    }
}

/// Outcome of a run that produced a weight trajectory.
#[derive(Debug, Clone)]
pub struct WeightedRun {
    /// Applied weights, `N_t × M`, row `k` held over `[t_k, t_{k+1})`.
    pub weights: DMatrix<f64>,
    /// The closed-loop (or optimized open-loop) state trajectory.
    pub trajectory: StateTrajectory,
    /// Reporting objective of the applied trajectory.
    pub objective: Objective,
    pub stats: SolveStats,
}
