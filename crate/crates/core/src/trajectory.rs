use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::grid::SpaceTimeGrid;

/// State samples `y(t_k, x_i)` over a full horizon.
///
/// Row `k` holds the state at time `t_k`; row 0 is always the initial
/// condition, so the matrix has `N_t + 1` rows of `n` values.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    grid: SpaceTimeGrid,
    values: DMatrix<f64>,
}

impl StateTrajectory {
    /// Wraps a `(N_t+1) × n` matrix of finite state values.
    pub fn new(grid: SpaceTimeGrid, values: DMatrix<f64>) -> Result<Self, CoreError> {
        if values.nrows() != grid.steps() + 1 {
            return Err(CoreError::DimensionMismatch {
                what: "trajectory rows",
                expected: grid.steps() + 1,
                got: values.nrows(),
            });
        }
        if values.ncols() != grid.n() {
            return Err(CoreError::DimensionMismatch {
                what: "trajectory columns",
                expected: grid.n(),
                got: values.ncols(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("state trajectory"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    /// The raw `(N_t+1) × n` value matrix.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// State at time step `k` as a column vector.
    pub fn state(&self, k: usize) -> DVector<f64> {
        self.values.row(k).transpose()
    }

    /// Terminal state `y(T, ·)`.
    pub fn terminal(&self) -> DVector<f64> {
        self.state(self.grid.steps())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        let grid = SpaceTimeGrid::new(1.0, 5, 1.0, 3).unwrap();
        assert!(StateTrajectory::new(grid.clone(), DMatrix::zeros(4, 5)).is_ok());
        assert!(StateTrajectory::new(grid.clone(), DMatrix::zeros(3, 5)).is_err());
        assert!(StateTrajectory::new(grid.clone(), DMatrix::zeros(4, 4)).is_err());
        let mut bad = DMatrix::zeros(4, 5);
        bad[(1, 1)] = f64::NAN;
        assert!(StateTrajectory::new(grid, bad).is_err());
    }

    #[test]
    fn terminal_is_last_row() {
        let grid = SpaceTimeGrid::new(1.0, 3, 1.0, 2).unwrap();
        let values = DMatrix::from_fn(3, 3, |k, _| k as f64);
        let traj = StateTrajectory::new(grid, values).unwrap();
        assert!(traj.terminal().iter().all(|&v| (v - 2.0).abs() < 1e-15));
        assert!(traj.state(0).iter().all(|&v| v.abs() < 1e-15));
    }
}
