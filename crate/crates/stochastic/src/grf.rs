use nalgebra::{DMatrix, DVector};
use oclab_core::CoreError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::StochasticError;

/// Squared-exponential Gaussian-random-field kernel
/// `k(x₁, x₂) = σ²·exp(−(x₁ − x₂)²/(2ℓ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfKernel {
    /// Variance `σ² ≥ 0` (zero gives the deterministic zero field).
    pub variance: f64,
    /// Length scale `ℓ > 0`.
    pub length_scale: f64,
}

impl GrfKernel {
    pub fn new(variance: f64, length_scale: f64) -> Result<Self, CoreError> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(CoreError::Config(format!(
                "kernel variance must be finite and non-negative, got {variance}"
            )));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(CoreError::Config(format!(
                "kernel length scale must be finite and positive, got {length_scale}"
            )));
        }
        Ok(Self {
            variance,
            length_scale,
        })
    }

    /// Default kernel for sampling controls on a domain of extent `span`
    /// under symmetric-ish bounds of half-width `half_width`: `ℓ = 0.2·span`
    /// and `σ = 0.5·half_width`, mild enough that clipping stays rare.
    pub fn default_for(span: f64, half_width: f64) -> Result<Self, CoreError> {
        Self::new((0.5 * half_width).powi(2), 0.2 * span)
    }

    /// Covariance value between two points.
    pub fn covariance(&self, x1: f64, x2: f64) -> f64 {
        let d = x1 - x2;
        self.variance * (-d * d / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// Draws one sample of the field at `points` from `N(0, K + εI)`.
///
/// The jittered covariance (`ε = 1e−10·σ²`) is factored by Cholesky; on
/// failure the jitter escalates tenfold up to three times before giving up.
/// A fixed seed gives a bitwise-identical draw.
pub fn sample_grf(
    kernel: &GrfKernel,
    points: &[f64],
    seed: u64,
) -> Result<DVector<f64>, StochasticError> {
    let n = points.len();
    if kernel.variance == 0.0 {
        return Ok(DVector::zeros(n));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("field sample points").into());
    }

    let base = DMatrix::from_fn(n, n, |i, j| kernel.covariance(points[i], points[j]));
    let mut jitter = 1e-10 * kernel.variance;
    let mut chol = None;
    let mut attempts = 0;
    while attempts <= 3 {
        let jittered = &base + DMatrix::identity(n, n) * jitter;
        if let Some(c) = jittered.cholesky() {
            chol = Some(c);
            break;
        }
        jitter *= 10.0;
        attempts += 1;
    }
    let Some(chol) = chol else {
        return Err(StochasticError::CovarianceFactorization { attempts });
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    Ok(chol.l() * z)
}
