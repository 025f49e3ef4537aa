use nalgebra::{DMatrix, DVector};

use crate::error::OptimError;
use crate::qn::BoxConstraints;

/// KKT residual tolerance the solver runs to.
const KKT_TOL: f64 = 1e-8;
/// Iteration cap; generous because the step size is fixed at `1/λ_max`.
const MAX_ITERS: usize = 200_000;

/// Minimizes `½·xᵀHx + qᵀx` over a box.
///
/// `H` must be symmetric positive semidefinite (validated by a Cholesky
/// factorization with a trace-scaled jitter). The solver is accelerated
/// projected gradient with the fixed step `1/λ_max(H)` (power iteration)
/// and a function-value restart; it stops when the KKT residual — gradient
/// components signed against their active bounds — drops to `1e−8`.
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    bounds: &BoxConstraints,
) -> Result<DVector<f64>, OptimError> {
    let n = q.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(OptimError::Config(format!(
            "H is {}×{}, expected {n}×{n}",
            h.nrows(),
            h.ncols()
        )));
    }
    if bounds.len() != n {
        return Err(OptimError::Config(format!(
            "bounds length {} does not match problem size {n}",
            bounds.len()
        )));
    }
    let scale = h.amax().max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                return Err(OptimError::Config("H is not symmetric".into()));
            }
        }
    }
    // PSD validation: Cholesky of H + jitter·I with jitter scaled to the
    // average diagonal; a PSD matrix passes, an indefinite one fails.
    let jitter = 1e-10 * (h.trace() / n as f64).abs().max(1e-300);
    let shifted = h + DMatrix::identity(n, n) * jitter;
    if shifted.cholesky().is_none() {
        return Err(OptimError::Config("H is not positive semidefinite".into()));
    }

    // Largest eigenvalue by power iteration (H is symmetric PSD).
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.7).sin());
    v /= v.norm();
    let mut lambda_max = 0.0;
    for _ in 0..200 {
        let w = h * &v;
        let norm = w.norm();
        if norm < 1e-300 {
            break;
        }
        lambda_max = norm;
        v = w / norm;
    }
    if lambda_max < 1e-300 {
        // H ≈ 0: minimize qᵀx over the box coordinatewise.
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = if q[i] > 0.0 {
                bounds.lower()[i]
            } else if q[i] < 0.0 {
                bounds.upper()[i]
            } else {
                bounds.lower()[i].max(0.0).min(bounds.upper()[i])
            };
        }
        return Ok(x);
    }
    let step = 1.0 / lambda_max;

    let kkt_residual = |x: &DVector<f64>, grad: &DVector<f64>| -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let lo = bounds.lower()[i];
            let hi = bounds.upper()[i];
            let at_lower = x[i] <= lo + 1e-12 * lo.abs().max(1.0);
            let at_upper = x[i] >= hi - 1e-12 * hi.abs().max(1.0);
            let r = if at_lower && at_upper {
                0.0 // fixed coordinate: any gradient is consistent
            } else if at_lower {
                (-grad[i]).max(0.0)
            } else if at_upper {
                grad[i].max(0.0)
            } else {
                grad[i].abs()
            };
            worst = worst.max(r);
        }
        worst
    };

    let fval = |x: &DVector<f64>| 0.5 * (h * x).dot(x) + q.dot(x);

    let mut x = DVector::zeros(n);
    bounds.project(&mut x);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut f_prev = fval(&x);

    for _ in 0..MAX_ITERS {
        let grad_y = h * &y + q;
        let mut x_new = &y - step * &grad_y;
        bounds.project(&mut x_new);

        let grad_x = h * &x_new + q;
        if kkt_residual(&x_new, &grad_x) <= KKT_TOL {
            return Ok(x_new);
        }

        let f_new = fval(&x_new);
        if f_new > f_prev {
            // Restart the momentum when acceleration overshoots.
            t = 1.0;
            y = x_new.clone();
        } else {
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &x_new + ((t - 1.0) / t_new) * (&x_new - &x);
            t = t_new;
        }
        x = x_new;
        f_prev = f_new;
    }
    Err(OptimError::Numerical(format!(
        "box QP failed to reach KKT residual {KKT_TOL:.1e} within {MAX_ITERS} iterations"
    )))
}
