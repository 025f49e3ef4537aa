//! Finite-difference validation of tape gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tape::{Tape, Var, VarRange};

/// Outcome of a gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Worst `|analytic − central FD|` over the checked coordinates,
    /// relative to the ∞-norm of the analytic gradient.
    pub max_rel: f64,
    /// Coordinates actually probed.
    pub checked: usize,
}

/// Compares the tape gradient of a scalar against central finite
/// differences at `coords` randomly chosen parameter coordinates.
///
/// `build` must construct the computation from scratch on the given tape:
/// it receives the parameter vector and returns the scalar output node plus
/// the leaf range holding those parameters. The same closure serves both
/// the analytic sweep and every FD probe, so the comparison sees exactly
/// one implementation of the function.
pub fn tape_gradient_check<F>(
    params: &[f64],
    coords: usize,
    eta: f64,
    seed: u64,
    mut build: F,
) -> GradCheckReport
where
    F: FnMut(&mut Tape, &[f64]) -> (Var, VarRange),
{
    assert!(!params.is_empty(), "nothing to differentiate");
    let mut tape = Tape::new();
    let (out, prange) = build(&mut tape, params);
    assert_eq!(prange.len(), params.len(), "leaf range must cover params");
    let adj = tape.backward(out);
    let analytic = adj.range(prange).to_vec();
    let scale = analytic
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()))
        .max(1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.to_vec();
    let mut max_rel = 0.0f64;
    for _ in 0..coords {
        let idx = rng.gen_range(0..params.len());
        let eps = eta * (1.0 + params[idx].abs());

        probe[idx] = params[idx] + eps;
        tape.clear();
        let (out_p, _) = build(&mut tape, &probe);
        let f_plus = tape.value(out_p);

        probe[idx] = params[idx] - eps;
        tape.clear();
        let (out_m, _) = build(&mut tape, &probe);
        let f_minus = tape.value(out_m);
        probe[idx] = params[idx];

        let fd = (f_plus - f_minus) / (2.0 * eps);
        max_rel = max_rel.max((analytic[idx] - fd).abs() / scale);
    }

    GradCheckReport {
        max_rel,
        checked: coords,
    }
}
