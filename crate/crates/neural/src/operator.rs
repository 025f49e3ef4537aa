//! Branch/trunk operator network: a learned one-step solver.
//!
//! The branch net embeds the pair (state, input) into a feature vector; the
//! trunk net embeds each spatial node coordinate into a feature vector of
//! the same width. The predicted next state at node `i` is the inner
//! product of the two embeddings. Because the trunk only sees coordinates,
//! its features are computed once per grid and reused across every step and
//! every sample.

use nalgebra::{DMatrix, DVector};

use crate::error::NeuralError;
use crate::nets::{DenseNet, EMPTY};
use crate::tape::{Activation, Tape, VarRange};
use rand::Rng;

/// The two parameter blocks of an [`OperatorNet`] registered on a tape.
#[derive(Debug, Clone, Copy)]
pub struct OperatorVars {
    pub branch: VarRange,
    pub trunk: VarRange,
}

/// Learned one-step propagator `(y_k, input_k) → y_{k+1}`.
#[derive(Debug, Clone)]
pub struct OperatorNet {
    branch: DenseNet,
    trunk: DenseNet,
    state_dim: usize,
    input_dim: usize,
    feature_dim: usize,
}

impl OperatorNet {
    /// Builds branch `[state+input, hidden…, features]` and trunk
    /// `[1, hidden…, features]` networks with a shared activation.
    pub fn new<R: Rng>(
        state_dim: usize,
        input_dim: usize,
        branch_hidden: &[usize],
        trunk_hidden: &[usize],
        feature_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        if state_dim == 0 || input_dim == 0 || feature_dim == 0 {
            return Err(NeuralError::Config(
                "operator dimensions must be positive".into(),
            ));
        }
        let mut branch_sizes = vec![state_dim + input_dim];
        branch_sizes.extend_from_slice(branch_hidden);
        branch_sizes.push(feature_dim);
        let mut trunk_sizes = vec![1];
        trunk_sizes.extend_from_slice(trunk_hidden);
        trunk_sizes.push(feature_dim);
        Ok(Self {
            branch: DenseNet::new(&branch_sizes, activation, rng)?,
            trunk: DenseNet::new(&trunk_sizes, activation, rng)?,
            state_dim,
            input_dim,
            feature_dim,
        })
    }

    pub fn from_parts(
        branch: DenseNet,
        trunk: DenseNet,
        state_dim: usize,
        input_dim: usize,
    ) -> Result<Self, NeuralError> {
        if branch.input_dim() != state_dim + input_dim
            || trunk.input_dim() != 1
            || branch.output_dim() != trunk.output_dim()
        {
            return Err(NeuralError::Config(
                "branch/trunk layouts are inconsistent with the declared dimensions".into(),
            ));
        }
        let feature_dim = branch.output_dim();
        Ok(Self {
            branch,
            trunk,
            state_dim,
            input_dim,
            feature_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn branch(&self) -> &DenseNet {
        &self.branch
    }

    pub fn trunk(&self) -> &DenseNet {
        &self.trunk
    }

    pub fn branch_mut(&mut self) -> &mut DenseNet {
        &mut self.branch
    }

    pub fn trunk_mut(&mut self) -> &mut DenseNet {
        &mut self.trunk
    }

    pub fn param_count(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count()
    }

    /// Registers both parameter blocks as tape leaves.
    pub fn register(&self, tape: &mut Tape) -> OperatorVars {
        OperatorVars {
            branch: self.branch.register(tape),
            trunk: self.trunk.register(tape),
        }
    }

    /// Trunk embeddings for every node coordinate, on the tape. Call once
    /// per tape and reuse across steps.
    pub fn trunk_features_tape(
        &self,
        tape: &mut Tape,
        trunk_params: VarRange,
        xs: &[f64],
    ) -> Vec<VarRange> {
        xs.iter()
            .map(|&x| {
                let coord = tape.leaf_slice(&[x]);
                self.trunk.forward_tape(tape, trunk_params, coord, EMPTY)
            })
            .collect()
    }

    /// One surrogate step on the tape: branch embedding of `[y; input]`,
    /// then one inner product per node. The result block is contiguous.
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        branch_params: VarRange,
        trunk_features: &[VarRange],
        y: VarRange,
        input: VarRange,
    ) -> VarRange {
        assert_eq!(y.len(), self.state_dim, "state width mismatch");
        assert_eq!(input.len(), self.input_dim, "input width mismatch");
        assert_eq!(trunk_features.len(), self.state_dim, "one feature per node");
        let embedding = self.branch.forward_tape(tape, branch_params, y, input);
        let start = tape.len() as u32;
        for feat in trunk_features {
            tape.dot(*feat, embedding);
        }
        VarRange {
            start,
            len: self.state_dim as u32,
        }
    }

    /// Trunk embeddings without a tape (rows indexed by node).
    pub fn trunk_features_plain(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut feats = DMatrix::zeros(xs.len(), self.feature_dim);
        for (i, &x) in xs.iter().enumerate() {
            let row = self.trunk.forward_plain(&[x]);
            for (j, v) in row.iter().enumerate() {
                feats[(i, j)] = *v;
            }
        }
        feats
    }

    /// One surrogate step without a tape, in the same operation order as
    /// [`OperatorNet::step_tape`].
    pub fn step_plain(&self, trunk_features: &DMatrix<f64>, y: &[f64], input: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.state_dim, "state width mismatch");
        assert_eq!(input.len(), self.input_dim, "input width mismatch");
        let mut joint = Vec::with_capacity(y.len() + input.len());
        joint.extend_from_slice(y);
        joint.extend_from_slice(input);
        let embedding = self.branch.forward_plain(&joint);
        (0..self.state_dim)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..self.feature_dim {
                    acc += trunk_features[(i, j)] * embedding[j];
                }
                acc
            })
            .collect()
    }

    /// Rolls the surrogate forward under a fixed input schedule. `inputs`
    /// has one row per step for time-varying inputs, or a single row that
    /// is reused when the input is static. Returns a `(steps+1) × n` state
    /// table like the reference solvers.
    pub fn rollout_plain(
        &self,
        trunk_features: &DMatrix<f64>,
        y0: &DVector<f64>,
        inputs: &DMatrix<f64>,
        steps: usize,
    ) -> DMatrix<f64> {
        assert!(
            inputs.nrows() == 1 || inputs.nrows() >= steps,
            "need one input row, or one per step"
        );
        let n = self.state_dim;
        let mut out = DMatrix::zeros(steps + 1, n);
        let mut y: Vec<f64> = y0.iter().copied().collect();
        for j in 0..n {
            out[(0, j)] = y[j];
        }
        for k in 0..steps {
            let row = if inputs.nrows() == 1 { 0 } else { k };
            let input: Vec<f64> = inputs.row(row).iter().copied().collect();
            y = self.step_plain(trunk_features, &y, &input);
            for j in 0..n {
                out[(k + 1, j)] = y[j];
            }
        }
        out
    }
}

/// Largest absolute one-step prediction error of the operator over a set of
/// transitions, together with the matching largest one-step state change.
/// A trained operator should beat the state change by a wide margin.
pub fn one_step_error_stats(
    net: &OperatorNet,
    trunk_features: &DMatrix<f64>,
    samples: &[oclab_stochastic::OneStepSample],
) -> (f64, f64) {
    let mut max_err = 0.0f64;
    let mut max_change = 0.0f64;
    for s in samples {
        let pred = net.step_plain(trunk_features, s.state.as_slice(), s.input.as_slice());
        for j in 0..pred.len() {
            max_err = max_err.max((pred[j] - s.next_state[j]).abs());
            max_change = max_change.max((s.next_state[j] - s.state[j]).abs());
        }
    }
    (max_err, max_change)
}

/// Largest absolute error of a full surrogate rollout against a reference
/// trajectory table (rows are time levels).
pub fn rollout_max_abs_error(rollout: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    assert_eq!(rollout.nrows(), reference.nrows(), "row count mismatch");
    assert_eq!(rollout.ncols(), reference.ncols(), "column count mismatch");
    let mut worst = 0.0f64;
    for (a, b) in rollout.iter().zip(reference.iter()) {
        worst = worst.max((a - b).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_operator(seed: u64) -> OperatorNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        OperatorNet::new(5, 2, &[8], &[8], 6, Activation::Silu, &mut rng).unwrap()
    }

    #[test]
    fn tape_and_plain_steps_agree_bitwise() {
        let net = tiny_operator(11);
        let xs: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let y: Vec<f64> = (0..5).map(|i| 0.1 * i as f64).collect();
        let c = vec![0.3, -0.2];

        let feats_plain = net.trunk_features_plain(&xs);
        let plain = net.step_plain(&feats_plain, &y, &c);

        let mut tape = Tape::new();
        let vars = net.register(&mut tape);
        let feats = net.trunk_features_tape(&mut tape, vars.trunk, &xs);
        let yv = tape.leaf_slice(&y);
        let cv = tape.leaf_slice(&c);
        let out = net.step_tape(&mut tape, vars.branch, &feats, yv, cv);
        for i in 0..5 {
            assert_eq!(tape.value(out.var(i)), plain[i], "node {i}");
        }
    }

    #[test]
    fn rollout_reuses_a_single_static_input_row() {
        let net = tiny_operator(12);
        let xs: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let feats = net.trunk_features_plain(&xs);
        let y0 = DVector::from_element(5, 0.2);
        let single = DMatrix::from_row_slice(1, 2, &[0.1, 0.4]);
        let repeated = DMatrix::from_fn(3, 2, |_, j| single[(0, j)]);
        let a = net.rollout_plain(&feats, &y0, &single, 3);
        let b = net.rollout_plain(&feats, &y0, &repeated, 3);
        assert_eq!(a, b);
        assert_eq!(a.nrows(), 4);
    }
}
