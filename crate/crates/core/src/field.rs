use nalgebra::{DMatrix, DVector};

use crate::basis::{evaluate_basis, BasisSet};
use crate::error::CoreError;
use crate::grid::SpaceTimeGrid;

/// Elementwise box `lower ≤ v ≤ upper` applied to controls or basis weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    lower: f64,
    upper: f64,
}

impl BoxBounds {
    /// Bounds with `lower ≤ upper`, both finite.
    pub fn new(lower: f64, upper: f64) -> Result<Self, CoreError> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(CoreError::NonFinite("box bounds"));
        }
        if lower > upper {
            return Err(CoreError::Config(format!(
                "lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Half-width of the box, `(upper − lower)/2`.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    /// Midpoint of the box.
    pub fn center(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }

    /// Projects a scalar onto the box.
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    /// Projects every entry of a vector onto the box, in place.
    pub fn project(&self, v: &mut DVector<f64>) {
        for x in v.iter_mut() {
            *x = self.clamp(*x);
        }
    }

    /// Whether every entry lies inside the box up to `tol`.
    pub fn contains_all(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.iter()
            .all(|&x| x >= self.lower - tol && x <= self.upper + tol)
    }
}

/// A control input: either one static spatial profile held for the whole
/// horizon, or a trajectory of basis weights.
///
/// The weighted variant stores one row of `M` weights per time step. Both
/// `N_t` rows (one row per step, held over `[t_k, t_{k+1})`) and `N_t + 1`
/// rows (nodal values, consumed as step averages by solvers that want them)
/// are accepted; which one a solver expects is documented on the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlField {
    /// Static spatial control `u(x_i)`, length `n`, applied at every step.
    Static(DVector<f64>),
    /// Time-varying weights `c(t_k)` (rows) against a spatial basis.
    Weighted {
        weights: DMatrix<f64>,
        basis: BasisSet,
    },
}

impl ControlField {
    /// Checks that the field fits `grid`: static controls must have one value
    /// per spatial node, weighted controls `N_t` or `N_t + 1` rows of `M`
    /// weights, and all entries must be finite.
    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<(), CoreError> {
        match self {
            ControlField::Static(u) => {
                if u.len() != grid.n() {
                    return Err(CoreError::DimensionMismatch {
                        what: "static control",
                        expected: grid.n(),
                        got: u.len(),
                    });
                }
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::NonFinite("static control"));
                }
            }
            ControlField::Weighted { weights, basis } => {
                let rows = weights.nrows();
                if rows != grid.steps() && rows != grid.steps() + 1 {
                    return Err(CoreError::DimensionMismatch {
                        what: "weight trajectory rows",
                        expected: grid.steps(),
                        got: rows,
                    });
                }
                if weights.ncols() != basis.modes() {
                    return Err(CoreError::DimensionMismatch {
                        what: "weight trajectory columns",
                        expected: basis.modes(),
                        got: weights.ncols(),
                    });
                }
                if weights.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::NonFinite("weight trajectory"));
                }
            }
        }
        Ok(())
    }

    /// Reconstructs the spatial control at step `k` on `grid`.
    ///
    /// For weighted fields this is `Φ·c(t_k)`; for static fields the stored
    /// profile, independent of `k`.
    pub fn spatial_control(
        &self,
        grid: &SpaceTimeGrid,
        k: usize,
    ) -> Result<DVector<f64>, CoreError> {
        match self {
            ControlField::Static(u) => Ok(u.clone()),
            ControlField::Weighted { weights, basis } => {
                let phi = evaluate_basis(basis, grid)?;
                let c = weights.row(k).transpose();
                Ok(&phi * c)
            }
        }
    }

    /// Whether all stored values satisfy `bounds` up to `tol`.
    ///
    /// For weighted fields the bound applies to the weights themselves,
    /// matching how the optimizers constrain them.
    pub fn satisfies(&self, bounds: &BoxBounds, tol: f64) -> bool {
        match self {
            ControlField::Static(u) => bounds.contains_all(u, tol),
            ControlField::Weighted { weights, .. } => weights
                .iter()
                .all(|&v| v >= bounds.lower() - tol && v <= bounds.upper() + tol),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;

    #[test]
    fn bounds_reject_inverted_interval() {
        assert!(BoxBounds::new(1.0, -1.0).is_err());
        assert!(BoxBounds::new(f64::NAN, 1.0).is_err());
        let b = BoxBounds::new(-1.0, 1.0).unwrap();
        assert_eq!(b.clamp(2.0), 1.0);
        assert_eq!(b.clamp(-3.0), -1.0);
        assert_eq!(b.clamp(0.25), 0.25);
    }

    #[test]
    fn weighted_field_accepts_nt_and_nt_plus_one_rows() {
        let grid = SpaceTimeGrid::new(1.0, 11, 1.0, 5).unwrap();
        let basis = BasisSet::new(BasisKind::Cosine, 2, 1.0).unwrap();
        for rows in [5usize, 6] {
            let field = ControlField::Weighted {
                weights: DMatrix::zeros(rows, 2),
                basis: basis.clone(),
            };
            assert!(field.validate(&grid).is_ok(), "rows = {rows}");
        }
        let bad = ControlField::Weighted {
            weights: DMatrix::zeros(4, 2),
            basis,
        };
        assert!(bad.validate(&grid).is_err());
    }
}
