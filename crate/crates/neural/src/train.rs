//! Supervised operator training on one-step transitions.
//!
//! The operator is fit by minibatch AdamW on the mean squared one-step
//! prediction error over a dataset's training split. After every epoch the
//! validation split is scored with the cheap tape-free forward path, and the
//! parameters with the best validation loss are what the caller gets back
//! (last-epoch overfitting never wins).
//!
//! Everything is deterministic for a fixed seed: batches come from one
//! seeded shuffle stream and all reductions run in a fixed order.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oclab_stochastic::{Dataset, OneStepSample, Split};

use crate::adam::AdamW;
use crate::error::NeuralError;
use crate::operator::OperatorNet;
use crate::tape::{Tape, Var};

/// Hyperparameters for supervised operator training.
#[derive(Debug, Clone)]
pub struct OperatorTrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Per-epoch multiplicative learning-rate decay (`1.0` disables it).
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Cap on the transitions visited per epoch (a fresh shuffled prefix
    /// each epoch, so successive epochs still cover the whole split).
    pub samples_per_epoch: Option<usize>,
    /// Cap on the validation transitions scored per epoch (deterministic
    /// stride subsample).
    pub validation_cap: Option<usize>,
}

impl Default for OperatorTrainOptions {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 128,
            lr: 1e-3,
            lr_decay: 1.0,
            weight_decay: 1e-4,
            seed: 0,
            samples_per_epoch: None,
            validation_cap: Some(2000),
        }
    }
}

/// Per-epoch loss curves and the model-selection outcome.
#[derive(Debug, Clone)]
pub struct OperatorTrainReport {
    /// Mean training batch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss per epoch (tape-free forward path).
    pub valid_loss: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    /// Validation loss of the kept parameters.
    pub best_valid: f64,
}

fn stride_subsample<T: Clone>(items: &[T], cap: Option<usize>) -> Vec<T> {
    match cap {
        Some(cap) if cap > 0 && items.len() > cap => {
            let stride = items.len() as f64 / cap as f64;
            (0..cap)
                .map(|i| items[(i as f64 * stride) as usize].clone())
                .collect()
        }
        _ => items.to_vec(),
    }
}

fn validation_loss(net: &OperatorNet, xs: &[f64], samples: &[OneStepSample]) -> f64 {
    let feats = net.trunk_features_plain(xs);
    let mut acc = 0.0;
    let mut count = 0usize;
    for s in samples {
        let pred = net.step_plain(&feats, s.state.as_slice(), s.input.as_slice());
        for (p, t) in pred.iter().zip(s.next_state.iter()) {
            let d = p - t;
            acc += d * d;
            count += 1;
        }
    }
    acc / count as f64
}

/// Fits `net` to the dataset's training split and selects the epoch with
/// the best validation loss.
pub fn train_operator(
    net: &mut OperatorNet,
    dataset: &Dataset,
    opts: &OperatorTrainOptions,
) -> Result<OperatorTrainReport, NeuralError> {
    if opts.epochs == 0 || opts.batch_size == 0 {
        return Err(NeuralError::Config(
            "epochs and batch size must be positive".into(),
        ));
    }
    let train = dataset.one_step_samples(Split::Train);
    let valid_all = dataset.one_step_samples(Split::Validation);
    if train.is_empty() || valid_all.is_empty() {
        return Err(NeuralError::Config(
            "dataset needs non-empty train and validation splits".into(),
        ));
    }
    let valid = stride_subsample(&valid_all, opts.validation_cap);
    let xs: Vec<f64> = dataset.grid.xs().to_vec();
    let n = net.state_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut opt_branch = AdamW::new(net.branch().param_count(), opts.lr, opts.weight_decay);
    let mut opt_trunk = AdamW::new(net.trunk().param_count(), opts.lr, opts.weight_decay);

    let mut report = OperatorTrainReport {
        train_loss: Vec::with_capacity(opts.epochs),
        valid_loss: Vec::with_capacity(opts.epochs),
        best_epoch: 0,
        best_valid: f64::INFINITY,
    };
    let mut best_branch = net.branch().params().to_vec();
    let mut best_trunk = net.trunk().params().to_vec();

    let mut tape = Tape::new();
    for epoch in 0..opts.epochs {
        let lr_now = opts.lr * opts.lr_decay.powi(epoch as i32);
        opt_branch.lr = lr_now;
        opt_trunk.lr = lr_now;
        order.shuffle(&mut rng);
        let visit = opts
            .samples_per_epoch
            .map(|c| c.min(order.len()))
            .unwrap_or(order.len());

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order[..visit].chunks(opts.batch_size).enumerate() {
            tape.clear();
            let vars = net.register(&mut tape);
            let feats = net.trunk_features_tape(&mut tape, vars.trunk, &xs);
            let mut total: Option<Var> = None;
            for &i in chunk {
                let s = &train[i];
                let y = tape.leaf_slice(s.state.as_slice());
                let c = tape.leaf_slice(s.input.as_slice());
                let pred = net.step_tape(&mut tape, vars.branch, &feats, y, c);
                let truth = tape.leaf_slice(s.next_state.as_slice());
                let diff = tape.map_sub(pred, truth);
                let sq = tape.dot(diff, diff);
                total = Some(match total {
                    None => sq,
                    Some(t) => tape.add(t, sq),
                });
            }
            let scale = 1.0 / (chunk.len() * n) as f64;
            let loss_var = tape.affine_const(total.expect("non-empty batch"), scale, 0.0);
            let loss = tape.value(loss_var);
            if !loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    lr: opts.lr,
                    batch_size: opts.batch_size,
                });
            }
            let adj = tape.backward(loss_var);
            opt_branch.step(net.branch_mut().params_mut(), adj.range(vars.branch));
            opt_trunk.step(net.trunk_mut().params_mut(), adj.range(vars.trunk));
            epoch_loss += loss;
            batches += 1;
        }

        let vloss = validation_loss(net, &xs, &valid);
        report.train_loss.push(epoch_loss / batches as f64);
        report.valid_loss.push(vloss);
        if vloss < report.best_valid {
            report.best_valid = vloss;
            report.best_epoch = epoch;
            best_branch.copy_from_slice(net.branch().params());
            best_trunk.copy_from_slice(net.trunk().params());
        }
    }

    net.branch_mut().params_mut().copy_from_slice(&best_branch);
    net.trunk_mut().params_mut().copy_from_slice(&best_trunk);
    Ok(report)
}

/// Writes per-epoch loss curves as CSV (`epoch,train_loss,valid_loss`).
pub fn write_loss_csv(path: &Path, report: &OperatorTrainReport) -> Result<(), NeuralError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "epoch,train_loss,valid_loss")?;
    for (epoch, (t, v)) in report
        .train_loss
        .iter()
        .zip(report.valid_loss.iter())
        .enumerate()
    {
        writeln!(file, "{epoch},{t:.12e},{v:.12e}")?;
    }
    Ok(())
}
