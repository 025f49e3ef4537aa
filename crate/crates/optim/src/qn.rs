use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use crate::error::OptimError;

/// Per-coordinate box constraints `lower_i ≤ x_i ≤ upper_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraints {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxConstraints {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, OptimError> {
        if lower.len() != upper.len() {
            return Err(OptimError::Config(format!(
                "bound vectors disagree in length: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for i in 0..lower.len() {
            if !(lower[i].is_finite() && upper[i].is_finite()) {
                return Err(OptimError::Config(format!("non-finite bound at {i}")));
            }
            if lower[i] > upper[i] {
                return Err(OptimError::Config(format!(
                    "lower bound {} exceeds upper bound {} at {i}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same `[lo, hi]` interval for every coordinate.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self, OptimError> {
        Self::new(DVector::from_element(n, lo), DVector::from_element(n, hi))
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.len() == 0
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..x.len()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    /// Projected gradient: the gradient with components zeroed where they
    /// push against an active bound; its ∞-norm is the stationarity measure.
    pub fn projected_gradient(&self, x: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        let mut pg = g.clone();
        for i in 0..x.len() {
            let at_lower = x[i] <= self.lower[i] + ACTIVE_TOL * bound_scale(self.lower[i]);
            let at_upper = x[i] >= self.upper[i] - ACTIVE_TOL * bound_scale(self.upper[i]);
            if (at_lower && g[i] > 0.0) || (at_upper && g[i] < 0.0) {
                pg[i] = 0.0;
            }
        }
        pg
    }
}

const ACTIVE_TOL: f64 = 1e-12;

fn bound_scale(b: f64) -> f64 {
    b.abs().max(1.0)
}

/// Options for the projected quasi-Newton minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnOptions {
    /// Number of curvature pairs kept for the two-loop recursion.
    pub memory: usize,
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop when the relative decrease `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)`
    /// falls to this value or below.
    pub ftol: f64,
    /// Stop when the projected-gradient ∞-norm falls below this value.
    pub gtol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Maximum halvings in one backtracking line search.
    pub max_line_trials: usize,
}

impl Default for QnOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 100,
            ftol: 1e-6,
            gtol: 1e-8,
            c1: 1e-4,
            max_line_trials: 30,
        }
    }
}

/// Why the minimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnStatus {
    /// Projected gradient reached `gtol`.
    GradientTolerance,
    /// Relative objective decrease fell to `ftol`.
    FunctionTolerance,
    /// Ran out of iterations.
    MaxIterations,
    /// Backtracking found no acceptable step; the best iterate is returned.
    LineSearchFailed,
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub f: f64,
    pub projected_gradient_norm: f64,
    pub evaluations: usize,
}

/// Result of [`qn_minimize_box`].
#[derive(Debug, Clone)]
pub struct QnResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub iterations: usize,
    /// Number of objective+gradient callback invocations.
    pub evaluations: usize,
    pub status: QnStatus,
    pub trace: Vec<TraceRow>,
}

/// Writes an optimizer trace as CSV (`iteration,f,projected_gradient_norm,evaluations`).
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), OptimError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "iteration,f,projected_gradient_norm,evaluations")?;
    for row in trace {
        writeln!(
            w,
            "{},{},{},{}",
            row.iteration, row.f, row.projected_gradient_norm, row.evaluations
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Minimizes a smooth function over a box by projected limited-memory
/// quasi-Newton iteration.
///
/// Each iteration: identify the active set from the projected gradient,
/// build a search direction with the two-loop recursion restricted to free
/// coordinates (falling back to steepest descent when curvature information
/// is useless), then backtrack along the projected arc until the Armijo
/// condition holds against the actual projected step. The objective
/// sequence is monotone non-increasing, and every iterate satisfies the
/// bounds exactly.
pub fn qn_minimize_box<F>(
    mut f_and_grad: F,
    x0: &DVector<f64>,
    bounds: &BoxConstraints,
    opts: &QnOptions,
) -> Result<QnResult, OptimError>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    if x0.len() != bounds.len() {
        return Err(OptimError::Config(format!(
            "start point length {} does not match bounds length {}",
            x0.len(),
            bounds.len()
        )));
    }
    assert!(opts.memory >= 1, "quasi-Newton memory must be positive");
    assert!(
        opts.ftol > 0.0 && opts.gtol > 0.0,
        "tolerances must be positive"
    );

    let n = x0.len();
    let mut x = x0.clone();
    bounds.project(&mut x);
    let (mut fx, mut g) = f_and_grad(&x);
    let mut evals = 1usize;
    if !fx.is_finite() {
        return Err(OptimError::NonFinite { coordinate: None });
    }

    let mut pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut trace = Vec::new();
    let mut status = QnStatus::MaxIterations;
    let mut iterations = 0usize;

    for iter in 1..=opts.max_iters {
        let pg = bounds.projected_gradient(&x, &g);
        let pg_norm = pg.amax();
        trace.push(TraceRow {
            iteration: iter - 1,
            f: fx,
            projected_gradient_norm: pg_norm,
            evaluations: evals,
        });
        if pg_norm <= opts.gtol {
            status = QnStatus::GradientTolerance;
            break;
        }
        iterations = iter;

        // Active coordinates: pinned at a bound with the gradient pushing out.
        let active: Vec<bool> = (0..n)
            .map(|i| {
                let at_lower =
                    x[i] <= bounds.lower()[i] + ACTIVE_TOL * bound_scale(bounds.lower()[i]);
                let at_upper =
                    x[i] >= bounds.upper()[i] - ACTIVE_TOL * bound_scale(bounds.upper()[i]);
                (at_lower && g[i] > 0.0) || (at_upper && g[i] < 0.0)
            })
            .collect();

        // Two-loop recursion on the masked gradient.
        let mut q = g.clone();
        for i in 0..n {
            if active[i] {
                q[i] = 0.0;
            }
        }
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = s.dot(y) / y.dot(y);
            q *= gamma;
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        let mut direction = -q;
        for i in 0..n {
            if active[i] {
                direction[i] = 0.0;
            }
        }
        // Guard against non-descent directions from stale curvature.
        if direction.dot(&g) >= -1e-14 * direction.norm() * g.norm() {
            direction = -&pg;
        }

        // Backtracking along the projected arc.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_line_trials {
            let mut x_trial = &x + alpha * &direction;
            bounds.project(&mut x_trial);
            let step = &x_trial - &x;
            if step.amax() == 0.0 {
                break;
            }
            let (f_trial, g_trial) = f_and_grad(&x_trial);
            evals += 1;
            if f_trial.is_finite() && f_trial <= fx + opts.c1 * g.dot(&step) {
                accepted = Some((x_trial, f_trial, g_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            status = QnStatus::LineSearchFailed;
            break;
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        } else {
            // Armijo-only backtracking cannot guarantee the curvature
            // condition; a non-positive sᵀy invalidates the stored model
            // (keeping it freezes the direction scale), so restart clean.
            pairs.clear();
        }

        let decrease = fx - f_new;
        let rel = decrease / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        if rel <= opts.ftol {
            status = QnStatus::FunctionTolerance;
            break;
        }
    }

    let pg_norm = bounds.projected_gradient(&x, &g).amax();
    trace.push(TraceRow {
        iteration: iterations,
        f: fx,
        projected_gradient_norm: pg_norm,
        evaluations: evals,
    });
    Ok(QnResult {
        x,
        f: fx,
        iterations,
        evaluations: evals,
        status,
        trace,
    })
}
