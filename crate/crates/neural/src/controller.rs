//! Learned feedback controllers with actuator bounds built in.
//!
//! Both variants squash their raw network outputs through
//! `lo + (hi−lo)·σ(·)`, so every emitted control is inside the actuator box
//! by construction — no clipping, no penalty needed to stay feasible. With
//! a zeroed output layer the controller starts exactly at the box midpoint.
//!
//! * [`SurrogateController::Static`]: one dense forward pass of
//!   `[initial state; target]` producing a whole spatial control profile.
//! * [`SurrogateController::Recurrent`]: a stacked gated recurrent cell
//!   stepped once per time level with `[current state; target]`, followed by
//!   a linear head producing that step's basis weights.

use rand::Rng;

use crate::error::NeuralError;
use crate::nets::{squash_plain, squash_tape, DenseNet, RecurrentCell, EMPTY};
use crate::tape::{Activation, Tape, VarRange};

/// Tape handles for a registered controller's parameter blocks.
#[derive(Debug, Clone, Copy)]
pub struct ControllerVars {
    pub primary: VarRange,
    pub head: VarRange,
}

/// Hidden state of a recurrent controller on the tape.
pub type RecurrentTapeState = Vec<VarRange>;

/// A bounded learned controller.
#[derive(Debug, Clone)]
pub enum SurrogateController {
    /// Whole control profile from one forward pass of `[y0; target]`.
    Static { net: DenseNet, lo: f64, hi: f64 },
    /// Per-step basis weights from a recurrent cell over `[y_k; target]`.
    Recurrent {
        cell: RecurrentCell,
        head: DenseNet,
        lo: f64,
        hi: f64,
    },
}

impl SurrogateController {
    /// Static controller `[2n, hidden…, out]`, output layer zeroed so the
    /// initial policy sits at the box midpoint.
    pub fn new_static<R: Rng>(
        state_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        activation: Activation,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        check_bounds(lo, hi)?;
        let mut sizes = vec![2 * state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(out_dim);
        let mut net = DenseNet::new(&sizes, activation, rng)?;
        net.zero_output_layer();
        Ok(Self::Static { net, lo, hi })
    }

    /// Recurrent controller: gated cell over `[y_k; target]` plus a linear
    /// head to `out_dim` basis weights, head zeroed for a midpoint start.
    pub fn new_recurrent<R: Rng>(
        state_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        check_bounds(lo, hi)?;
        let cell = RecurrentCell::new(2 * state_dim, hidden, rng)?;
        let mut head = DenseNet::new(&[cell.output_dim(), out_dim], Activation::Identity, rng)?;
        head.zero_output_layer();
        Ok(Self::Recurrent { cell, head, lo, hi })
    }

    pub fn from_parts_static(net: DenseNet, lo: f64, hi: f64) -> Result<Self, NeuralError> {
        check_bounds(lo, hi)?;
        Ok(Self::Static { net, lo, hi })
    }

    pub fn from_parts_recurrent(
        cell: RecurrentCell,
        head: DenseNet,
        lo: f64,
        hi: f64,
    ) -> Result<Self, NeuralError> {
        check_bounds(lo, hi)?;
        if head.input_dim() != cell.output_dim() {
            return Err(NeuralError::Config(
                "head input does not match the cell output".into(),
            ));
        }
        Ok(Self::Recurrent { cell, head, lo, hi })
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self, Self::Recurrent { .. })
    }

    /// Actuator box `(lo, hi)`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Static { lo, hi, .. } | Self::Recurrent { lo, hi, .. } => (*lo, *hi),
        }
    }

    /// Width of one emitted control vector.
    pub fn output_dim(&self) -> usize {
        match self {
            Self::Static { net, .. } => net.output_dim(),
            Self::Recurrent { head, .. } => head.output_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::Static { net, .. } => net.param_count(),
            Self::Recurrent { cell, head, .. } => cell.param_count() + head.param_count(),
        }
    }

    /// Mutable views of the flat parameter blocks, in registration order.
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Self::Static { net, .. } => vec![net.params_mut()],
            Self::Recurrent { cell, head, .. } => vec![cell.params_mut(), head.params_mut()],
        }
    }

    /// Read-only views of the flat parameter blocks, in registration order.
    pub fn param_blocks(&self) -> Vec<&[f64]> {
        match self {
            Self::Static { net, .. } => vec![net.params()],
            Self::Recurrent { cell, head, .. } => vec![cell.params(), head.params()],
        }
    }

    /// Registers the parameters as tape leaves.
    pub fn register(&self, tape: &mut Tape) -> ControllerVars {
        match self {
            Self::Static { net, .. } => ControllerVars {
                primary: net.register(tape),
                head: EMPTY,
            },
            Self::Recurrent { cell, head, .. } => ControllerVars {
                primary: cell.register(tape),
                head: head.register(tape),
            },
        }
    }

    /// Static variant: the bounded control profile for `[y0; target]`.
    pub fn forward_static_tape(
        &self,
        tape: &mut Tape,
        vars: ControllerVars,
        y0: VarRange,
        target: VarRange,
    ) -> VarRange {
        match self {
            Self::Static { net, lo, hi } => {
                let raw = net.forward_tape(tape, vars.primary, y0, target);
                squash_tape(tape, raw, *lo, *hi)
            }
            Self::Recurrent { .. } => panic!("static forward on a recurrent controller"),
        }
    }

    /// Static variant without a tape.
    pub fn forward_static_plain(&self, y0: &[f64], target: &[f64]) -> Vec<f64> {
        match self {
            Self::Static { net, lo, hi } => {
                let mut joint = Vec::with_capacity(y0.len() + target.len());
                joint.extend_from_slice(y0);
                joint.extend_from_slice(target);
                squash_plain(&net.forward_plain(&joint), *lo, *hi)
            }
            Self::Recurrent { .. } => panic!("static forward on a recurrent controller"),
        }
    }

    /// Fresh zero hidden state on the tape (recurrent variant).
    pub fn zero_state_tape(&self, tape: &mut Tape) -> RecurrentTapeState {
        match self {
            Self::Recurrent { cell, .. } => cell.zero_state_tape(tape),
            Self::Static { .. } => Vec::new(),
        }
    }

    /// Fresh zero hidden state for the plain path (recurrent variant).
    pub fn zero_state_plain(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Recurrent { cell, .. } => cell.zero_state_plain(),
            Self::Static { .. } => Vec::new(),
        }
    }

    /// Recurrent variant: one bounded control vector for this time level.
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        vars: ControllerVars,
        y: VarRange,
        target: VarRange,
        state: &RecurrentTapeState,
    ) -> (VarRange, RecurrentTapeState) {
        match self {
            Self::Recurrent { cell, head, lo, hi } => {
                let input = tape.concat(&[y, target]);
                let (out, next) = cell.step_tape(tape, vars.primary, input, state);
                let raw = head.forward_tape(tape, vars.head, out, EMPTY);
                (squash_tape(tape, raw, *lo, *hi), next)
            }
            Self::Static { .. } => panic!("recurrent step on a static controller"),
        }
    }

    /// Recurrent variant without a tape.
    pub fn step_plain(&self, y: &[f64], target: &[f64], state: &mut [Vec<f64>]) -> Vec<f64> {
        match self {
            Self::Recurrent { cell, head, lo, hi } => {
                let mut joint = Vec::with_capacity(y.len() + target.len());
                joint.extend_from_slice(y);
                joint.extend_from_slice(target);
                let out = cell.step_plain(&joint, state);
                squash_plain(&head.forward_plain(&out), *lo, *hi)
            }
            Self::Static { .. } => panic!("recurrent step on a static controller"),
        }
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<(), NeuralError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(NeuralError::Config(format!(
            "controller bounds [{lo}, {hi}] are not a finite non-empty box"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_static_controller_emits_the_box_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ctrl =
            SurrogateController::new_static(4, &[6], 4, Activation::Relu, -2.0, 4.0, &mut rng)
                .unwrap();
        let u = ctrl.forward_static_plain(&[0.1, 0.5, -0.3, 0.9], &[1.0, 1.0, 1.0, 1.0]);
        for v in u {
            assert_eq!(v, 1.0, "midpoint of [-2, 4]");
        }
    }

    #[test]
    fn recurrent_tape_and_plain_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ctrl = SurrogateController::new_recurrent(3, &[5], 2, -1.0, 1.0, &mut rng).unwrap();
        // Give the head non-zero weights so the outputs move.
        for block in ctrl.param_blocks_mut() {
            for (i, p) in block.iter_mut().enumerate() {
                if *p == 0.0 {
                    *p = 0.01 * ((i % 7) as f64 - 3.0);
                }
            }
        }
        let target = [0.5, 0.4, 0.3];
        let y0 = [0.0, 0.1, 0.2];
        let y1 = [0.2, 0.3, 0.1];

        let mut plain_state = ctrl.zero_state_plain();
        let c0_plain = ctrl.step_plain(&y0, &target, &mut plain_state);
        let c1_plain = ctrl.step_plain(&y1, &target, &mut plain_state);

        let mut tape = Tape::new();
        let vars = ctrl.register(&mut tape);
        let mut state = ctrl.zero_state_tape(&mut tape);
        let yv = tape.leaf_slice(&y0);
        let tv = tape.leaf_slice(&target);
        let (c0, next) = ctrl.step_tape(&mut tape, vars, yv, tv, &state);
        state = next;
        let yv1 = tape.leaf_slice(&y1);
        let (c1, _) = ctrl.step_tape(&mut tape, vars, yv1, tv, &state);

        for i in 0..2 {
            assert_eq!(tape.value(c0.var(i)), c0_plain[i]);
            assert_eq!(tape.value(c1.var(i)), c1_plain[i]);
        }
    }
}
