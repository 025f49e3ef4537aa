use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::grid::SpaceTimeGrid;

/// Which family of spatial basis functions a [`BasisSet`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `φ_j(x) = cos(jπx/L)` for `j = 0 … M−1`; the `j = 0` mode is the
    /// constant function, so this family can represent nonzero means and is
    /// compatible with zero-flux boundaries.
    Cosine,
    /// `φ_j(x) = sin((j+1)πx/L)` for `j = 0 … M−1`; every mode vanishes at
    /// both endpoints, matching homogeneous Dirichlet boundaries.
    Sine,
    /// Interleaved pairs `sin(kπx/L), cos(kπx/L)` for `k = 1, 2, …`.
    FourierPairs,
}

/// A truncated family of `M` spatial basis functions on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    kind: BasisKind,
    modes: usize,
    length: f64,
}

impl BasisSet {
    /// Creates a basis of `modes ≥ 1` functions on a domain of length `length > 0`.
    pub fn new(kind: BasisKind, modes: usize, length: f64) -> Result<Self, CoreError> {
        if modes < 1 {
            return Err(CoreError::Config("basis needs at least one mode".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(CoreError::Config(format!(
                "basis domain length must be finite and positive, got {length}"
            )));
        }
        Ok(Self {
            kind,
            modes,
            length,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Number of modes `M`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Domain length the modes are periodic against.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Value of mode `j` at position `x`.
    pub fn mode_value(&self, j: usize, x: f64) -> f64 {
        let pi_over_l = std::f64::consts::PI / self.length;
        match self.kind {
            BasisKind::Cosine => (j as f64 * pi_over_l * x).cos(),
            BasisKind::Sine => ((j + 1) as f64 * pi_over_l * x).sin(),
            BasisKind::FourierPairs => {
                let k = (j / 2 + 1) as f64;
                if j % 2 == 0 {
                    (k * pi_over_l * x).sin()
                } else {
                    (k * pi_over_l * x).cos()
                }
            }
        }
    }
}

/// Samples every mode of `basis` at the spatial nodes of `grid`, producing
/// the `n × M` matrix `Φ` with `Φ[i, j] = φ_j(x_i)`.
///
/// The basis and grid must agree on the domain length.
pub fn evaluate_basis(basis: &BasisSet, grid: &SpaceTimeGrid) -> Result<DMatrix<f64>, CoreError> {
    if (basis.length() - grid.length()).abs() > 1e-12 * basis.length().max(1.0) {
        return Err(CoreError::Config(format!(
            "basis domain length {} does not match grid length {}",
            basis.length(),
            grid.length()
        )));
    }
    let n = grid.n();
    let m = basis.modes();
    Ok(DMatrix::from_fn(n, m, |i, j| {
        basis.mode_value(j, grid.xs()[i])
    }))
}

/// Reconstructs the spatial control `u = Φ·c` from basis weights `c`.
pub fn reconstruct_control(
    weights: &DVector<f64>,
    basis_matrix: &DMatrix<f64>,
) -> Result<DVector<f64>, CoreError> {
    if weights.len() != basis_matrix.ncols() {
        return Err(CoreError::DimensionMismatch {
            what: "basis weight vector",
            expected: basis_matrix.ncols(),
            got: weights.len(),
        });
    }
    Ok(basis_matrix * weights)
}

/// Discrete Gram matrix `Φᵀ W Φ` of a sampled basis under trapezoid
/// quadrature weights (`W = Δx·diag(½, 1, …, 1, ½)`).
///
/// Trapezoid weights integrate products of the trigonometric modes exactly
/// (below the grid's Nyquist limit), so for the cosine family this matches
/// the analytic Gram `diag(L, L/2, …, L/2)` to rounding error. The
/// endpoint-inclusive rectangle rule used by the objective would instead
/// leave `O(Δx)` residue on same-parity off-diagonals; this diagnostic is
/// about the basis itself, not the objective's quadrature convention.
pub fn basis_gram(basis_matrix: &DMatrix<f64>, dx: f64) -> DMatrix<f64> {
    let n = basis_matrix.nrows();
    let m = basis_matrix.ncols();
    let mut gram = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc += w * basis_matrix[(i, a)] * basis_matrix[(i, b)];
            }
            gram[(a, b)] = dx * acc;
        }
    }
    gram
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceTimeGrid {
        SpaceTimeGrid::new(1.0, 41, 1.0, 10).unwrap()
    }

    #[test]
    fn cosine_first_mode_is_constant_one() {
        let basis = BasisSet::new(BasisKind::Cosine, 1, 1.0).unwrap();
        let phi = evaluate_basis(&basis, &grid()).unwrap();
        assert_eq!(phi.ncols(), 1);
        assert!(phi.column(0).iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn sine_modes_vanish_at_endpoints() {
        let basis = BasisSet::new(BasisKind::Sine, 4, 1.0).unwrap();
        let phi = evaluate_basis(&basis, &grid()).unwrap();
        for j in 0..4 {
            assert!(phi[(0, j)].abs() < 1e-12);
            assert!(phi[(40, j)].abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_pairs_alternate_sin_cos() {
        let basis = BasisSet::new(BasisKind::FourierPairs, 4, 1.0).unwrap();
        let x = 0.3;
        let pi = std::f64::consts::PI;
        assert!((basis.mode_value(0, x) - (pi * x).sin()).abs() < 1e-15);
        assert!((basis.mode_value(1, x) - (pi * x).cos()).abs() < 1e-15);
        assert!((basis.mode_value(2, x) - (2.0 * pi * x).sin()).abs() < 1e-15);
        assert!((basis.mode_value(3, x) - (2.0 * pi * x).cos()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_domain_length_is_an_error() {
        let basis = BasisSet::new(BasisKind::Cosine, 3, 2.0).unwrap();
        assert!(evaluate_basis(&basis, &grid()).is_err());
    }
}
