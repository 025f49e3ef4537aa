//! Parameter containers for the differentiable models: plain dense networks
//! and a gated recurrent cell.
//!
//! Each container owns its parameters as one flat `Vec<f64>` (layer by
//! layer, weights row-major then biases). Evaluation comes in two flavors
//! that share the parameter layout: `*_tape` builds the computation on a
//! [`Tape`] for training, `*_plain` evaluates with ordinary arithmetic in
//! the same operation order for cheap inference — the two must agree to the
//! last bit, which the tests assert.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::NeuralError;
use crate::tape::{Activation, Tape, VarRange};

/// Fully connected network with a fixed hidden activation and a linear
/// output layer.
#[derive(Debug, Clone)]
pub struct DenseNet {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

fn layer_param_count(input: usize, output: usize) -> usize {
    output * input + output
}

fn init_std(activation: Activation, fan_in: usize) -> f64 {
    let gain = match activation {
        Activation::Relu | Activation::Silu => 2.0,
        Activation::Tanh | Activation::Identity => 1.0,
    };
    (gain / fan_in as f64).sqrt()
}

impl DenseNet {
    /// A network with layer widths `sizes = [input, hidden…, output]` and
    /// variance-scaled Gaussian initialization.
    pub fn new<R: Rng>(
        sizes: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        if sizes.len() < 2 {
            return Err(NeuralError::Config(format!(
                "a dense net needs at least input and output sizes, got {sizes:?}"
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(NeuralError::Config("zero-width layer".into()));
        }
        let mut params = Vec::new();
        for pair in sizes.windows(2) {
            let (input, output) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, init_std(activation, input)).expect("finite std");
            for _ in 0..output * input {
                params.push(normal.sample(rng));
            }
            params.extend(std::iter::repeat(0.0).take(output));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Rebuilds a network from a layout and a parameter blob (checkpoint
    /// loading).
    pub fn from_params(
        sizes: Vec<usize>,
        activation: Activation,
        params: Vec<f64>,
    ) -> Result<Self, NeuralError> {
        let expected: usize = sizes
            .windows(2)
            .map(|p| layer_param_count(p[0], p[1]))
            .sum();
        if params.len() != expected {
            return Err(NeuralError::Config(format!(
                "parameter blob has {} values, layout {sizes:?} needs {expected}",
                params.len()
            )));
        }
        Ok(Self {
            sizes,
            activation,
            params,
        })
    }

    /// Zeroes the output layer so the network is identically zero; used to
    /// start controllers at the squash midpoint and operators at rest.
    pub fn zero_output_layer(&mut self) {
        let last = self.sizes.len() - 2;
        let offset: usize = self
            .sizes
            .windows(2)
            .take(last)
            .map(|p| layer_param_count(p[0], p[1]))
            .sum();
        for p in &mut self.params[offset..] {
            *p = 0.0;
        }
    }

    /// Registers the parameters as tape leaves (one contiguous block).
    pub fn register(&self, tape: &mut Tape) -> VarRange {
        tape.leaf_slice(&self.params)
    }

    /// Forward pass on the tape. The first layer reads the concatenation
    /// `[x1; x2]` (pass an empty `x2` for a single segment); deeper layers
    /// consume the previous activations. Output layer is linear.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        params: VarRange,
        x1: VarRange,
        x2: VarRange,
    ) -> VarRange {
        assert_eq!(
            x1.len() + x2.len(),
            self.input_dim(),
            "input does not match the first layer"
        );
        let mut offset = 0usize;
        let mut cur = x1;
        let mut extra = x2;
        let layers = self.sizes.len() - 1;
        for (l, pair) in self.sizes.windows(2).enumerate() {
            let (input, output) = (pair[0], pair[1]);
            let w_base = offset;
            let b_base = offset + output * input;
            let start = tape.len() as u32;
            for row in 0..output {
                let w = params.slice(w_base + row * input, input);
                let bias = params.var(b_base + row);
                tape.affine2(w, cur, extra, bias);
            }
            let mut out = VarRange {
                start,
                len: output as u32,
            };
            if l + 1 < layers {
                out = tape.map_activation(out, self.activation);
            }
            offset += layer_param_count(input, output);
            cur = out;
            extra = EMPTY;
        }
        cur
    }

    /// Forward pass without a tape, in the same operation order.
    pub fn forward_plain(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim(), "input width mismatch");
        let mut offset = 0usize;
        let mut cur = input.to_vec();
        let layers = self.sizes.len() - 1;
        for (l, pair) in self.sizes.windows(2).enumerate() {
            let (input_w, output) = (pair[0], pair[1]);
            let w_base = offset;
            let b_base = offset + output * input_w;
            let mut next = Vec::with_capacity(output);
            for row in 0..output {
                let mut acc = self.params[b_base + row];
                let w = &self.params[w_base + row * input_w..w_base + (row + 1) * input_w];
                for (wi, xi) in w.iter().zip(cur.iter()) {
                    acc += wi * xi;
                }
                next.push(acc);
            }
            if l + 1 < layers {
                for v in &mut next {
                    *v = apply_plain(self.activation, *v);
                }
            }
            offset += layer_param_count(input_w, output);
            cur = next;
        }
        cur
    }
}

pub(crate) const EMPTY: VarRange = VarRange { start: 0, len: 0 };

pub(crate) fn apply_plain(activation: Activation, x: f64) -> f64 {
    match activation {
        Activation::Relu => x.max(0.0),
        Activation::Silu => x * crate::tape::stable_sigmoid(x),
        Activation::Tanh => x.tanh(),
        Activation::Identity => x,
    }
}

/// Stacked gated recurrent cells (GRU gating): layer `l` consumes the
/// hidden state of layer `l−1` (layer 0 consumes the external input).
///
/// Per layer, with input `u` and hidden `h`:
/// `z = σ(W_z·[u;h] + b_z)`, `r = σ(W_r·[u;h] + b_r)`,
/// `n = tanh(W_n·[u; r∘h] + b_n)`, `h′ = h − z∘h + z∘n`.
#[derive(Debug, Clone)]
pub struct RecurrentCell {
    input_dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
}

fn gru_layer_params(input: usize, hidden: usize) -> usize {
    3 * layer_param_count(input + hidden, hidden)
}

impl RecurrentCell {
    pub fn new<R: Rng>(
        input_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        if hidden.is_empty() || hidden.iter().any(|&h| h == 0) || input_dim == 0 {
            return Err(NeuralError::Config(
                "recurrent cell needs a positive input width and hidden sizes".into(),
            ));
        }
        let mut params = Vec::new();
        let mut input = input_dim;
        for &h in hidden {
            let fan_in = input + h;
            let normal = Normal::new(0.0, init_std(Activation::Tanh, fan_in)).expect("finite");
            for _ in 0..3 {
                for _ in 0..h * fan_in {
                    params.push(normal.sample(rng));
                }
                params.extend(std::iter::repeat(0.0).take(h));
            }
            input = h;
        }
        Ok(Self {
            input_dim,
            hidden: hidden.to_vec(),
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden
    }

    pub fn output_dim(&self) -> usize {
        *self.hidden.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn from_params(
        input_dim: usize,
        hidden: Vec<usize>,
        params: Vec<f64>,
    ) -> Result<Self, NeuralError> {
        let mut expected = 0usize;
        let mut input = input_dim;
        for &h in &hidden {
            expected += gru_layer_params(input, h);
            input = h;
        }
        if params.len() != expected {
            return Err(NeuralError::Config(format!(
                "parameter blob has {} values, cell layout needs {expected}",
                params.len()
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            params,
        })
    }

    pub fn register(&self, tape: &mut Tape) -> VarRange {
        tape.leaf_slice(&self.params)
    }

    /// Fresh all-zero hidden state for the plain path.
    pub fn zero_state_plain(&self) -> Vec<Vec<f64>> {
        self.hidden.iter().map(|&h| vec![0.0; h]).collect()
    }

    /// Fresh all-zero hidden state on the tape (constant leaves).
    pub fn zero_state_tape(&self, tape: &mut Tape) -> Vec<VarRange> {
        self.hidden
            .iter()
            .map(|&h| tape.leaf_slice(&vec![0.0; h]))
            .collect()
    }

    /// One recurrent step on the tape. `input` must be contiguous
    /// (concatenate beforehand with [`Tape::leaf_slice`] or copies); the
    /// returned state ranges are contiguous and feed the next step.
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        params: VarRange,
        input: VarRange,
        state: &[VarRange],
    ) -> (VarRange, Vec<VarRange>) {
        assert_eq!(state.len(), self.hidden.len(), "state depth mismatch");
        assert_eq!(input.len(), self.input_dim, "input width mismatch");
        let mut offset = 0usize;
        let mut u = input;
        let mut next_state = Vec::with_capacity(self.hidden.len());
        for (l, &h) in self.hidden.iter().enumerate() {
            let fan_in = u.len() + h;
            let gate = |tape: &mut Tape, gate_idx: usize, x2: VarRange, u: VarRange| {
                let base = offset + gate_idx * layer_param_count(fan_in, h);
                let w_base = base;
                let b_base = base + h * fan_in;
                let start = tape.len() as u32;
                for row in 0..h {
                    let w = params.slice(w_base + row * fan_in, fan_in);
                    let bias = params.var(b_base + row);
                    tape.affine2(w, u, x2, bias);
                }
                VarRange {
                    start,
                    len: h as u32,
                }
            };

            let hx = state[l];
            let z_raw = gate(tape, 0, hx, u);
            let z = tape.map_sigmoid(z_raw);
            let r_raw = gate(tape, 1, hx, u);
            let r = tape.map_sigmoid(r_raw);
            let rh = tape.map_mul(r, hx);
            let n_raw = gate(tape, 2, rh, u);
            let n = tape.map_activation(n_raw, Activation::Tanh);

            // h′ = h − z∘h + z∘n, staged so the result block is contiguous.
            let zh = tape.map_mul(z, hx);
            let zn = tape.map_mul(z, n);
            let keep = tape.map_sub(hx, zh);
            let h_next = tape.map_add(keep, zn);

            next_state.push(h_next);
            u = h_next;
            offset += gru_layer_params(fan_in - h, h);
        }
        (u, next_state)
    }

    /// One recurrent step without a tape, in the same operation order.
    pub fn step_plain(&self, input: &[f64], state: &mut [Vec<f64>]) -> Vec<f64> {
        assert_eq!(state.len(), self.hidden.len(), "state depth mismatch");
        assert_eq!(input.len(), self.input_dim, "input width mismatch");
        let mut offset = 0usize;
        let mut u = input.to_vec();
        for (l, &h) in self.hidden.iter().enumerate() {
            let fan_in = u.len() + h;
            let gate = |params: &[f64], gate_idx: usize, u: &[f64], x2: &[f64]| -> Vec<f64> {
                let base = offset + gate_idx * layer_param_count(fan_in, h);
                let w_base = base;
                let b_base = base + h * fan_in;
                let mut out = Vec::with_capacity(h);
                for row in 0..h {
                    let w = &params[w_base + row * fan_in..w_base + (row + 1) * fan_in];
                    let mut acc = params[b_base + row];
                    for (wi, xi) in w.iter().zip(u.iter().chain(x2.iter())) {
                        acc += wi * xi;
                    }
                    out.push(acc);
                }
                out
            };

            let hx = state[l].clone();
            let mut z = gate(&self.params, 0, &u, &hx);
            for v in &mut z {
                *v = crate::tape::stable_sigmoid(*v);
            }
            let mut r = gate(&self.params, 1, &u, &hx);
            for v in &mut r {
                *v = crate::tape::stable_sigmoid(*v);
            }
            let rh: Vec<f64> = r.iter().zip(hx.iter()).map(|(a, b)| a * b).collect();
            let mut n = gate(&self.params, 2, &u, &rh);
            for v in &mut n {
                *v = v.tanh();
            }
            let h_next: Vec<f64> = (0..h)
                .map(|i| (hx[i] - z[i] * hx[i]) + z[i] * n[i])
                .collect();
            state[l] = h_next.clone();
            u = h_next;
            offset += gru_layer_params(fan_in - h, h);
        }
        u
    }
}

/// Smoothly maps raw network outputs into `[lo, hi]`:
/// `out = lo + (hi − lo)·σ(raw)` — bounds hold by construction and a raw
/// zero lands exactly on the midpoint.
pub fn squash_tape(tape: &mut Tape, raw: VarRange, lo: f64, hi: f64) -> VarRange {
    assert!(lo < hi, "squash interval is empty");
    // Two passes so the result is one contiguous block.
    let sig_start = tape.len() as u32;
    for i in 0..raw.len() {
        tape.sigmoid(raw.var(i));
    }
    let sig = VarRange {
        start: sig_start,
        len: raw.len,
    };
    let out_start = tape.len() as u32;
    for i in 0..sig.len() {
        tape.affine_const(sig.var(i), hi - lo, lo);
    }
    VarRange {
        start: out_start,
        len: raw.len,
    }
}

/// Plain-arithmetic counterpart of [`squash_tape`].
pub fn squash_plain(raw: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo < hi, "squash interval is empty");
    raw.iter()
        .map(|&x| (hi - lo) * crate::tape::stable_sigmoid(x) + lo)
        .collect()
}
