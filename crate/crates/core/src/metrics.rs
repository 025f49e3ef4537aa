use nalgebra::DVector;

use crate::target::TargetProfile;
use crate::trajectory::StateTrajectory;

/// Mean squared difference `(1/n)·Σ_i (a_i − b_i)²`.
///
/// Panics if the vectors have different lengths.
pub fn mean_squared_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    assert_eq!(a.len(), b.len(), "mean_squared_error length mismatch");
    let n = a.len() as f64;
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}

/// Largest absolute entrywise difference `max_i |a_i − b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_abs_diff length mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Accuracy metric used in the result tables: per-node mean squared error
/// between the terminal state and the target, `(1/n)·Σ_i (y(T,x_i) − t_i)²`.
pub fn terminal_mse(traj: &StateTrajectory, target: &TargetProfile) -> f64 {
    let t = target.evaluate(traj.grid());
    mean_squared_error(&traj.terminal(), &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceTimeGrid;
    use nalgebra::DMatrix;

    #[test]
    fn terminal_mse_matches_hand_values() {
        let grid = SpaceTimeGrid::new(1.0, 5, 1.0, 2).unwrap();
        // Terminal row equals the target -> 0.
        let exact = StateTrajectory::new(grid.clone(), DMatrix::from_element(3, 5, 1.0)).unwrap();
        assert_eq!(terminal_mse(&exact, &TargetProfile::Constant(1.0)), 0.0);
        // Terminal row offset by 0.1 everywhere -> 0.01.
        let off = StateTrajectory::new(grid, DMatrix::from_element(3, 5, 1.1)).unwrap();
        let err = terminal_mse(&off, &TargetProfile::Constant(1.0));
        assert!((err - 0.01).abs() < 1e-15);
    }
}
