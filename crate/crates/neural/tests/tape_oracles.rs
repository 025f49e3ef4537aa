//! Finite-difference oracles for the tape gradients.
//!
//! Every network class — dense nets under each activation, the branch/trunk
//! operator, the recurrent cell — and the fully unrolled closed-loop loss
//! are differentiated on the tape and compared against central differences
//! at dozens of randomly chosen parameter coordinates. The closed-loop
//! check exercises every fused op, the squash, the rollout recursion, and
//! the penalty composition in one graph.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oclab_core::{BasisKind, BasisSet, ObjectiveWeights, SpaceTimeGrid};
use oclab_neural::{
    closed_loop_rollout, pdeop_loss, tape_gradient_check, tracking_objective_tape, Activation,
    ControllerVars, DenseNet, OperatorNet, OperatorVars, RecurrentCell, SurrogateController, Tape,
    Var, VarRange,
};
use oclab_solvers::{build_cn_operator, CnInputKind, ReactionDiffusionParams};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn linear_net_gradients_are_exact() {
    // With no hidden layer the network is affine and the loss quadratic,
    // so central differences are exact up to rounding.
    let mut r = rng(41);
    let mut net = DenseNet::new(&[4, 3], Activation::Identity, &mut r).unwrap();
    let x = [0.3, -0.7, 0.2, 0.9];
    let params = net.params().to_vec();
    let report = tape_gradient_check(&params, 60, 1e-6, 7, |tape, p| {
        net.params_mut().copy_from_slice(p);
        let vars = net.register(tape);
        let xin = tape.leaf_slice(&x);
        let out = net.forward_tape(tape, vars, xin, VarRange::empty());
        (tape.dot(out, out), vars)
    });
    assert!(
        report.max_rel < 1e-9,
        "linear net gradient gap {:.3e}",
        report.max_rel
    );
}

#[test]
fn dense_net_gradients_match_central_differences_for_every_activation() {
    for (seed, act) in [
        (1u64, Activation::Silu),
        (2, Activation::Tanh),
        (3, Activation::Relu),
    ] {
        let mut r = rng(seed);
        let mut net = DenseNet::new(&[5, 8, 8, 2], act, &mut r).unwrap();
        let x: Vec<f64> = (0..5).map(|_| r.gen_range(-0.8..0.8)).collect();
        let params = net.params().to_vec();
        let report = tape_gradient_check(&params, 60, 1e-6, seed + 100, |tape, p| {
            net.params_mut().copy_from_slice(p);
            let vars = net.register(tape);
            let xin = tape.leaf_slice(&x);
            let out = net.forward_tape(tape, vars, xin, VarRange::empty());
            (tape.dot(out, out), vars)
        });
        assert!(
            report.max_rel < 1e-5,
            "{act:?} gradient gap {:.3e}",
            report.max_rel
        );
    }
}

#[test]
fn operator_step_gradients_match_central_differences() {
    let mut r = rng(9);
    let mut net = OperatorNet::new(6, 2, &[10], &[10], 8, Activation::Silu, &mut r).unwrap();
    let xs: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
    let y: Vec<f64> = (0..6).map(|_| r.gen_range(-0.5..0.5)).collect();
    let c = [0.4, -0.3];
    let nb = net.branch().param_count();
    let mut params = net.branch().params().to_vec();
    params.extend_from_slice(net.trunk().params());

    let report = tape_gradient_check(&params, 80, 1e-6, 17, |tape, p| {
        net.branch_mut().params_mut().copy_from_slice(&p[..nb]);
        net.trunk_mut().params_mut().copy_from_slice(&p[nb..]);
        let all = tape.leaf_slice(p);
        let vars = OperatorVars {
            branch: all.slice(0, nb),
            trunk: all.slice(nb, p.len() - nb),
        };
        let feats = net.trunk_features_tape(tape, vars.trunk, &xs);
        let yv = tape.leaf_slice(&y);
        let cv = tape.leaf_slice(&c);
        let pred = net.step_tape(tape, vars.branch, &feats, yv, cv);
        (tape.dot(pred, pred), all)
    });
    assert!(
        report.max_rel < 1e-5,
        "operator gradient gap {:.3e}",
        report.max_rel
    );
}

#[test]
fn recurrent_cell_gradients_match_central_differences() {
    let mut r = rng(23);
    let mut cell = RecurrentCell::new(3, &[6, 4], &mut r).unwrap();
    let seq: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let params = cell.params().to_vec();

    let report = tape_gradient_check(&params, 80, 1e-6, 29, |tape, p| {
        cell.params_mut().copy_from_slice(p);
        let vars = cell.register(tape);
        let mut state = cell.zero_state_tape(tape);
        let mut last = VarRange::empty();
        for step in &seq {
            let input = tape.leaf_slice(step);
            let (out, next) = cell.step_tape(tape, vars, input, &state);
            state = next;
            last = out;
        }
        (tape.dot(last, last), vars)
    });
    assert!(
        report.max_rel < 1e-5,
        "recurrent gradient gap {:.3e}",
        report.max_rel
    );
}

/// Builds a small linear plant consistent with the closed-loop tests.
fn small_grid() -> SpaceTimeGrid {
    SpaceTimeGrid::new(1.0, 7, 0.6, 6).unwrap()
}

#[test]
fn unrolled_static_closed_loop_loss_matches_central_differences() {
    let grid = small_grid();
    let n = grid.n();
    let mut r = rng(31);
    let controller =
        SurrogateController::new_static(n, &[10], n, Activation::Tanh, -1.0, 1.0, &mut r).unwrap();
    let operator = OperatorNet::new(n, n, &[12], &[10], 8, Activation::Silu, &mut r).unwrap();
    let weights = ObjectiveWeights::new(0.4, 1e-3).unwrap();
    let y0 = vec![0.0; n];
    let target: Vec<f64> = grid.xs().iter().map(|x| 0.5 + 0.2 * x).collect();

    // Flatten controller + branch + trunk parameters; perturb the middle of
    // the blob so every block is exercised.
    let ctrl = match &controller {
        SurrogateController::Static { net, .. } => net.clone(),
        _ => unreachable!(),
    };
    let nc = ctrl.param_count();
    let nb = operator.branch().param_count();
    let mut params = ctrl.params().to_vec();
    params.extend_from_slice(operator.branch().params());
    params.extend_from_slice(operator.trunk().params());
    let xs = grid.xs().to_vec();

    let report = tape_gradient_check(&params, 60, 1e-5, 37, |tape, p| {
        let all = tape.leaf_slice(p);
        let cvars = ControllerVars {
            primary: all.slice(0, nc),
            head: VarRange::empty(),
        };
        let ovars = OperatorVars {
            branch: all.slice(nc, nb),
            trunk: all.slice(nc + nb, p.len() - nc - nb),
        };
        let feats = operator.trunk_features_tape(tape, ovars.trunk, &xs);
        let y0v = tape.leaf_slice(&y0);
        let tv = tape.leaf_slice(&target);
        let rollout = closed_loop_rollout(
            tape,
            &controller,
            cvars,
            &operator,
            ovars,
            &feats,
            y0v,
            tv,
            6,
        );
        let j = tracking_objective_tape(tape, &rollout, tv, &grid, &weights);
        (j, all)
    });
    assert!(
        report.max_rel < 1e-5,
        "static closed-loop gradient gap {:.3e}",
        report.max_rel
    );
}

#[test]
fn unrolled_recurrent_closed_loop_loss_with_penalty_matches_central_differences() {
    let grid = small_grid();
    let n = grid.n();
    let m = 2usize;
    let mut r = rng(43);
    let mut controller = SurrogateController::new_recurrent(n, &[6], m, -0.8, 0.8, &mut r).unwrap();
    // Nudge the zeroed head so control gradients are non-trivial.
    for block in controller.param_blocks_mut() {
        for (i, v) in block.iter_mut().enumerate() {
            if *v == 0.0 {
                *v = 0.03 * (((i * 7 + 3) % 11) as f64 - 5.0);
            }
        }
    }
    let operator = OperatorNet::new(n, m, &[10], &[8], 6, Activation::Silu, &mut r).unwrap();
    let weights = ObjectiveWeights::new(1.0, 1e-2).unwrap();
    let y0 = vec![0.0; n];
    let target: Vec<f64> = grid.xs().iter().map(|x| 0.3 * (x * 3.0).sin()).collect();

    // A fixed "true step" probe target, so the sqrt penalty is on the path.
    let basis = BasisSet::new(BasisKind::Cosine, m, grid.length()).unwrap();
    let params_pde =
        ReactionDiffusionParams::with_uniform_reference(0.1, 0.5, 2.0, 0.0, n).unwrap();
    let op = build_cn_operator(&params_pde, &grid, CnInputKind::Basis(basis)).unwrap();

    let blocks: Vec<usize> = controller.param_blocks().iter().map(|b| b.len()).collect();
    let nb = operator.branch().param_count();
    let mut params: Vec<f64> = Vec::new();
    for b in controller.param_blocks() {
        params.extend_from_slice(b);
    }
    params.extend_from_slice(operator.branch().params());
    params.extend_from_slice(operator.trunk().params());
    let xs = grid.xs().to_vec();

    // Freeze the probe's true-step target at the unperturbed parameters:
    // training detaches it too, and freezing keeps the checked function
    // identical between the analytic sweep and every FD evaluation.
    let build = |tape: &mut Tape, p: &[f64], truth: Option<&[f64]>| -> (Var, VarRange, Vec<f64>) {
        let all = tape.leaf_slice(p);
        let cvars = ControllerVars {
            primary: all.slice(0, blocks[0]),
            head: all.slice(blocks[0], blocks[1]),
        };
        let base = blocks[0] + blocks[1];
        let ovars = OperatorVars {
            branch: all.slice(base, nb),
            trunk: all.slice(base + nb, p.len() - base - nb),
        };
        let feats = operator.trunk_features_tape(tape, ovars.trunk, &xs);
        let y0v = tape.leaf_slice(&y0);
        let tv = tape.leaf_slice(&target);
        let rollout = closed_loop_rollout(
            tape,
            &controller,
            cvars,
            &operator,
            ovars,
            &feats,
            y0v,
            tv,
            6,
        );
        let j = tracking_objective_tape(tape, &rollout, tv, &grid, &weights);
        let c_first = tape.values(rollout.controls[0]).to_vec();
        let loss = match truth {
            None => j,
            Some(t) => {
                let truth_leaves = tape.leaf_slice(t);
                let diff = tape.map_sub(rollout.states[1], truth_leaves);
                let sq = tape.dot(diff, diff);
                let guarded = tape.affine_const(sq, 1.0, 1e-24);
                let h = tape.sqrt(guarded);
                pdeop_loss(tape, j, &[(h, 0.7)])
            }
        };
        (loss, all, c_first)
    };

    let mut probe_tape = Tape::new();
    let (_, _, c_first) = build(&mut probe_tape, &params, None);
    let truth = op.step(
        &DVector::from_column_slice(&y0),
        &DVector::from_column_slice(&c_first),
    );
    let truth_vals: Vec<f64> = truth.iter().copied().collect();

    let report = tape_gradient_check(&params, 60, 1e-5, 53, |tape, p| {
        let (loss, all, _) = build(tape, p, Some(&truth_vals));
        (loss, all)
    });
    assert!(
        report.max_rel < 1e-5,
        "recurrent closed-loop gradient gap {:.3e}",
        report.max_rel
    );
}
