use nalgebra::DVector;

use crate::grid::SpaceTimeGrid;

/// Parametric terminal-state target `y_target(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetProfile {
    /// `y_target(x) = p1`.
    Constant(f64),
    /// `y_target(x) = p1·x + p2`.
    Ramp(f64, f64),
    /// `y_target(x) = p1 + p2·(sin(f0·x) + p3)`.
    Sine { p1: f64, p2: f64, p3: f64, f0: f64 },
    /// `y_target(x) = p1·x·(1 − x)`; zero at `x = 0` and `x = 1`, so it is
    /// compatible with homogeneous Dirichlet boundaries on a unit domain.
    Parabola(f64),
}

impl TargetProfile {
    /// Target value at position `x`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            TargetProfile::Constant(p1) => p1,
            TargetProfile::Ramp(p1, p2) => p1 * x + p2,
            TargetProfile::Sine { p1, p2, p3, f0 } => p1 + p2 * ((f0 * x).sin() + p3),
            TargetProfile::Parabola(p1) => p1 * x * (1.0 - x),
        }
    }

    /// Samples the target at the spatial nodes of `grid`.
    pub fn evaluate(&self, grid: &SpaceTimeGrid) -> DVector<f64> {
        DVector::from_iterator(grid.n(), grid.xs().iter().map(|&x| self.value(x)))
    }

    /// Stable label for tables and file names.
    pub fn label(&self) -> &'static str {
        match self {
            TargetProfile::Constant(p) if *p == 0.0 => "zero",
            TargetProfile::Constant(_) => "constant",
            TargetProfile::Ramp(..) => "ramp",
            TargetProfile::Sine { .. } => "sine",
            TargetProfile::Parabola(_) => "parabola",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_formulas() {
        let g = SpaceTimeGrid::new(1.0, 5, 1.0, 1).unwrap();
        let c = TargetProfile::Constant(1.0).evaluate(&g);
        assert!(c.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let r = TargetProfile::Ramp(1.0, 0.5).evaluate(&g);
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert!((r[4] - 1.5).abs() < 1e-15);

        let s = TargetProfile::Sine {
            p1: 1.0,
            p2: 0.2,
            p3: 0.0,
            f0: 6.0,
        };
        assert!((s.value(0.5) - (1.0 + 0.2 * 3.0f64.sin())).abs() < 1e-15);

        let p = TargetProfile::Parabola(2.0);
        assert!(p.value(0.0).abs() < 1e-15);
        assert!(p.value(1.0).abs() < 1e-15);
        assert!((p.value(0.5) - 0.5).abs() < 1e-15);
    }
}
