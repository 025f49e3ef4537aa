use crate::error::CoreError;

/// Uniform space–time grid over `[0, L] × [0, T]`.
///
/// Space is discretized with `n` nodes `x_i = i·Δx`, `Δx = L/(n−1)`, so the
/// first node sits at 0 and the last at `L`. Time is discretized with `N_t`
/// steps of size `Δt = T/N_t`, giving `N_t + 1` time points `t_k = k·Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    length: f64,
    n: usize,
    final_time: f64,
    steps: usize,
    dx: f64,
    dt: f64,
    xs: Vec<f64>,
}

impl SpaceTimeGrid {
    /// Builds a grid over `[0, length] × [0, final_time]` with `n` spatial
    /// nodes and `steps` time steps.
    ///
    /// Requires `n ≥ 3`, `steps ≥ 1`, and positive extents.
    pub fn new(length: f64, n: usize, final_time: f64, steps: usize) -> Result<Self, CoreError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(CoreError::Config(format!(
                "domain length must be finite and positive, got {length}"
            )));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(CoreError::Config(format!(
                "final time must be finite and positive, got {final_time}"
            )));
        }
        if n < 3 {
            return Err(CoreError::Config(format!(
                "need at least 3 spatial nodes, got {n}"
            )));
        }
        if steps < 1 {
            return Err(CoreError::Config("need at least 1 time step".into()));
        }
        let dx = length / (n - 1) as f64;
        let dt = final_time / steps as f64;
        let xs = (0..n).map(|i| i as f64 * dx).collect();
        Ok(Self {
            length,
            n,
            final_time,
            steps,
            dx,
            dt,
            xs,
        })
    }

    /// Domain length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of spatial nodes `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Final time `T`.
    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Number of time steps `N_t` (the grid has `N_t + 1` time points).
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Spatial spacing `Δx`.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Time step `Δt`.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Spatial node coordinates `x_0 … x_{n−1}`.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Time point `t_k = k·Δt`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// All time points `t_0 … t_{N_t}`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}
