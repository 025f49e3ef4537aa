use nalgebra::DVector;

use crate::error::SolverError;

/// A tridiagonal matrix stored by its three bands.
///
/// Used for the Burgers Newton systems `I − Δt/2·J(y)`, which are
/// tridiagonal because the convection and diffusion stencils only couple
/// nearest neighbours. Solves use the Thomas algorithm (LU without
/// pivoting); the Crank–Nicolson systems at benchmark step sizes are close
/// to the identity, so pivots stay well away from zero, but each solve
/// still guards against breakdown.
#[derive(Debug, Clone)]
pub struct Tridiag {
    /// Subdiagonal `a_i = M[i, i−1]`, length `n−1`.
    pub sub: Vec<f64>,
    /// Main diagonal, length `n`.
    pub diag: Vec<f64>,
    /// Superdiagonal `c_i = M[i, i+1]`, length `n−1`.
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Matrix–vector product `M·v`.
    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Transposed product `Mᵀ·v`.
    pub fn mul_vec_transpose(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sup[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sub[i] * v[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Solves `M·x = rhs` by the Thomas algorithm.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        let n = self.n();
        let mut c_star = vec![0.0; n];
        let mut d_star = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.abs() < 1e-14 {
            return Err(SolverError::Numerical("tridiagonal pivot underflow".into()));
        }
        c_star[0] = if n > 1 { self.sup[0] / pivot } else { 0.0 };
        d_star[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c_star[i - 1];
            if pivot.abs() < 1e-14 {
                return Err(SolverError::Numerical("tridiagonal pivot underflow".into()));
            }
            if i + 1 < n {
                c_star[i] = self.sup[i] / pivot;
            }
            d_star[i] = (rhs[i] - self.sub[i - 1] * d_star[i - 1]) / pivot;
        }
        let mut x = DVector::zeros(n);
        x[n - 1] = d_star[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_star[i] - c_star[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Solves `Mᵀ·x = rhs` (swap the off-diagonal bands and reuse [`Self::solve`]).
    pub fn solve_transpose(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        let t = Tridiag {
            sub: self.sup.clone(),
            diag: self.diag.clone(),
            sup: self.sub.clone(),
        };
        t.solve(rhs)
    }
}
