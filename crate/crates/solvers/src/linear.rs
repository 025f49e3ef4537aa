use nalgebra::{DMatrix, DVector};
use oclab_core::{
    evaluate_basis, BasisSet, ControlField, CoreError, SpaceTimeGrid, StateTrajectory,
};

use crate::error::SolverError;

/// Coefficients of the linear reaction–diffusion dynamics
/// `∂y/∂t = D·∂²y/∂x² − β·(y − y_ref) + α·u` with zero-flux boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionDiffusionParams {
    /// Diffusion rate `D ≥ 0`.
    pub diffusion: f64,
    /// Leakage rate `β` pulling the state toward the reference.
    pub leakage: f64,
    /// Control gain `α`.
    pub gain: f64,
    /// Reference profile `y_ref(x_i)` the leakage relaxes toward.
    pub reference: DVector<f64>,
}

impl ReactionDiffusionParams {
    pub fn new(
        diffusion: f64,
        leakage: f64,
        gain: f64,
        reference: DVector<f64>,
    ) -> Result<Self, CoreError> {
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(CoreError::Config(format!(
                "diffusion must be finite and non-negative, got {diffusion}"
            )));
        }
        if !leakage.is_finite() || !gain.is_finite() {
            return Err(CoreError::NonFinite("reaction-diffusion coefficients"));
        }
        if reference.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("reference profile"));
        }
        Ok(Self {
            diffusion,
            leakage,
            gain,
            reference,
        })
    }

    /// Same reference value at every node.
    pub fn with_uniform_reference(
        diffusion: f64,
        leakage: f64,
        gain: f64,
        reference: f64,
        n: usize,
    ) -> Result<Self, CoreError> {
        Self::new(
            diffusion,
            leakage,
            gain,
            DVector::from_element(n, reference),
        )
    }
}

/// Boundary handling a discrete operator was assembled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Zero-flux: mirrored second-difference end rows.
    Neumann,
    /// Homogeneous Dirichlet: endpoint values pinned to zero.
    Dirichlet,
}

/// How control enters the linear dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum CnInputKind {
    /// One value per spatial node (`B` is `n×n`).
    Static,
    /// Basis weights against `Φ` (`B` is `n×M`).
    Basis(BasisSet),
}

/// Precomputed Crank–Nicolson one-step map `y⁺ = A_CN·y + B·input + d`.
///
/// With the semi-discrete operator `A = D·L − β·I` (L the Neumann
/// Laplacian), the Crank–Nicolson discretization of
/// `ẏ = A·y + α·(control) + β·y_ref` gives
///
/// - `A_CN = (I − Δt/2·A)⁻¹ (I + Δt/2·A)`
/// - `B = Δt·(I − Δt/2·A)⁻¹·α·I` (static) or `Δt·(I − Δt/2·A)⁻¹·α·Φ` (basis)
/// - `d = Δt·(I − Δt/2·A)⁻¹·β·y_ref`
///
/// The factorization of `(I − Δt/2·A)` happens once, here; every later step
/// and adjoint sweep is a dense matrix–vector product.
#[derive(Debug, Clone)]
pub struct CnOperator {
    a_cn: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DVector<f64>,
    boundary: BoundaryKind,
    input_kind: CnInputKind,
    grid: SpaceTimeGrid,
}

impl CnOperator {
    /// Step matrix `A_CN` (n×n).
    pub fn a_cn(&self) -> &DMatrix<f64> {
        &self.a_cn
    }

    /// Input matrix `B` (n×n for static controls, n×M for basis weights).
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Drift vector `d` (n).
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn input_kind(&self) -> &CnInputKind {
        &self.input_kind
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    /// One Crank–Nicolson step `A_CN·y + (B·input + d)`.
    ///
    /// The grouping matters: [`rollout_linear`] hoists `B·u + d` for static
    /// controls, and replaying a stored transition through `step` must
    /// reproduce the rollout bitwise.
    pub fn step(&self, y: &DVector<f64>, input: &DVector<f64>) -> DVector<f64> {
        &self.a_cn * y + (&self.b * input + &self.d)
    }
}

/// Second-difference matrix with mirrored (zero-flux) boundary rows,
/// scaled by `1/Δx²`.
///
/// Row 0 is `(−2, 2, 0, …)/Δx²`, interior rows `(1, −2, 1)/Δx²`, and the
/// last row mirrors row 0. Every row sums to zero, so constants are in the
/// kernel; the trapezoid-weighted column sums also vanish, which is what
/// conservation statements are measured against.
pub fn neumann_laplacian(n: usize, dx: f64) -> DMatrix<f64> {
    assert!(n >= 3, "need at least 3 nodes for a second difference");
    let s = 1.0 / (dx * dx);
    let mut l = DMatrix::zeros(n, n);
    l[(0, 0)] = -2.0 * s;
    l[(0, 1)] = 2.0 * s;
    for i in 1..n - 1 {
        l[(i, i - 1)] = s;
        l[(i, i)] = -2.0 * s;
        l[(i, i + 1)] = s;
    }
    l[(n - 1, n - 2)] = 2.0 * s;
    l[(n - 1, n - 1)] = -2.0 * s;
    l
}

/// Assembles the Crank–Nicolson one-step map for reaction–diffusion
/// dynamics on `grid`; see [`CnOperator`] for the formulas.
pub fn build_cn_operator(
    params: &ReactionDiffusionParams,
    grid: &SpaceTimeGrid,
    input_kind: CnInputKind,
) -> Result<CnOperator, SolverError> {
    let n = grid.n();
    if params.reference.len() != n {
        return Err(CoreError::DimensionMismatch {
            what: "reference profile",
            expected: n,
            got: params.reference.len(),
        }
        .into());
    }
    let dt = grid.dt();
    let a = params.diffusion * neumann_laplacian(n, grid.dx())
        - params.leakage * DMatrix::identity(n, n);
    let m_left = DMatrix::identity(n, n) - 0.5 * dt * &a;
    let m_right = DMatrix::identity(n, n) + 0.5 * dt * &a;
    let lu = m_left.lu();
    // (I − Δt/2·A) is strictly diagonally dominant for D ≥ 0, β ≥ 0, so this
    // cannot trigger at valid parameters; guard anyway.
    let a_cn = lu
        .solve(&m_right)
        .ok_or_else(|| SolverError::Numerical("singular Crank-Nicolson system".into()))?;
    let b_raw = match &input_kind {
        CnInputKind::Static => dt * params.gain * DMatrix::identity(n, n),
        CnInputKind::Basis(basis) => dt * params.gain * evaluate_basis(basis, grid)?,
    };
    let b = lu
        .solve(&b_raw)
        .ok_or_else(|| SolverError::Numerical("singular Crank-Nicolson system".into()))?;
    let d = lu
        .solve(&(dt * params.leakage * &params.reference))
        .ok_or_else(|| SolverError::Numerical("singular Crank-Nicolson system".into()))?;
    Ok(CnOperator {
        a_cn,
        b,
        d,
        boundary: BoundaryKind::Neumann,
        input_kind,
        grid: grid.clone(),
    })
}

/// Rolls the linear dynamics forward from `y0` under `control`.
///
/// Static controls feed the same spatial profile every step. Weighted
/// controls feed basis weights: with `N_t` rows, step `k` uses `c(t_k)`
/// (left endpoint); with `N_t + 1` rows, step `k` uses the average
/// `(c(t_k) + c(t_{k+1}))/2`, the convention the heat benchmark's
/// discretization is derived with.
pub fn rollout_linear(
    op: &CnOperator,
    y0: &DVector<f64>,
    control: &ControlField,
) -> Result<StateTrajectory, SolverError> {
    let grid = op.grid();
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
    control.validate(grid)?;

    let mut values = DMatrix::zeros(steps + 1, n);
    values.row_mut(0).copy_from(&y0.transpose());
    let mut y = y0.clone();

    match (op.input_kind(), control) {
        (CnInputKind::Static, ControlField::Static(u)) => {
            // The per-step increment B·u + d never changes; hoist it.
            let forced = &op.b * u + &op.d;
            for k in 0..steps {
                y = &op.a_cn * &y + &forced;
                values.row_mut(k + 1).copy_from(&y.transpose());
            }
        }
        (CnInputKind::Basis(basis), ControlField::Weighted { weights, .. }) => {
            if weights.ncols() != basis.modes() {
                return Err(CoreError::DimensionMismatch {
                    what: "weight columns",
                    expected: basis.modes(),
                    got: weights.ncols(),
                }
                .into());
            }
            let averaged = weights.nrows() == steps + 1;
            for k in 0..steps {
                let input = if averaged {
                    0.5 * (weights.row(k) + weights.row(k + 1)).transpose()
                } else {
                    weights.row(k).transpose()
                };
                y = op.step(&y, &input);
                values.row_mut(k + 1).copy_from(&y.transpose());
            }
        }
        _ => {
            return Err(CoreError::Config(
                "control variant does not match the operator's input kind".into(),
            )
            .into())
        }
    }

    StateTrajectory::new(grid.clone(), values).map_err(Into::into)
}
