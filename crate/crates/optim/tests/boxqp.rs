//! Contract tests for the box-constrained QP solver, including an
//! exhaustive active-set enumeration oracle at small dimension.

use nalgebra::{DMatrix, DVector};
use oclab_optim::{solve_box_qp, BoxConstraints};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn clipped_identity_solution() {
    let n = 7;
    let h = DMatrix::identity(n, n);
    let q = DVector::from_element(n, -1.0);
    let bounds = BoxConstraints::uniform(n, 0.0, 0.5).unwrap();
    let x = solve_box_qp(&h, &q, &bounds).unwrap();
    for i in 0..n {
        assert!((x[i] - 0.5).abs() < 1e-8);
    }
}

#[test]
fn zero_linear_term_gives_zero() {
    let n = 5;
    let h = DMatrix::identity(n, n);
    let q = DVector::zeros(n);
    let bounds = BoxConstraints::uniform(n, -1.0, 1.0).unwrap();
    let x = solve_box_qp(&h, &q, &bounds).unwrap();
    assert!(x.amax() < 1e-8);
}

#[test]
fn indefinite_matrix_is_rejected() {
    let mut h = DMatrix::identity(3, 3);
    h[(2, 2)] = -1.0;
    let bounds = BoxConstraints::uniform(3, -1.0, 1.0).unwrap();
    assert!(solve_box_qp(&h, &DVector::zeros(3), &bounds).is_err());
}

fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.transpose() * &m + 0.1 * DMatrix::identity(n, n)
}

/// Solves the box QP exactly by enumerating every {lower, upper, free}
/// assignment, solving the free block, and checking primal/dual feasibility.
fn active_set_oracle(h: &DMatrix<f64>, q: &DVector<f64>, lo: f64, hi: f64) -> Option<DVector<f64>> {
    let n = q.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for assignment in 0..3usize.pow(n as u32) {
        let mut code = assignment;
        let mut kind = vec![0u8; n]; // 0 = lower, 1 = upper, 2 = free
        for k in kind.iter_mut() {
            *k = (code % 3) as u8;
            code /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut x = DVector::from_fn(n, |i, _| match kind[i] {
            0 => lo,
            1 => hi,
            _ => 0.0,
        });
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(free.len(), |a, _| -q[free[a]]);
            for a in 0..free.len() {
                for i in 0..n {
                    if kind[i] != 2 {
                        rhs[a] -= h[(free[a], i)] * x[i];
                    }
                }
            }
            let Some(sol) = hff.lu().solve(&rhs) else {
                continue;
            };
            for (a, &i) in free.iter().enumerate() {
                x[i] = sol[a];
            }
        }
        // Primal feasibility of the free block.
        if free.iter().any(|&i| x[i] < lo - 1e-12 || x[i] > hi + 1e-12) {
            continue;
        }
        // Dual feasibility at the pinned coordinates.
        let g = h * &x + q;
        let dual_ok = (0..n).all(|i| match kind[i] {
            0 => g[i] >= -1e-9,
            1 => g[i] <= 1e-9,
            _ => true,
        });
        if !dual_ok {
            continue;
        }
        let f = 0.5 * (h * &x).dot(&x) + q.dot(&x);
        if best.as_ref().map_or(true, |(fb, _)| f < *fb) {
            best = Some((f, x));
        }
    }
    best.map(|(_, x)| x)
}

#[test]
fn matches_active_set_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let n = 6;
        let h = random_pd(n, &mut rng);
        let q = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let bounds = BoxConstraints::uniform(n, -0.7, 0.7).unwrap();
        let x = solve_box_qp(&h, &q, &bounds).unwrap();
        let oracle = active_set_oracle(&h, &q, -0.7, 0.7).expect("oracle found no solution");
        for i in 0..n {
            assert!(
                (x[i] - oracle[i]).abs() < 1e-7,
                "trial {trial}, coordinate {i}: {} vs oracle {}",
                x[i],
                oracle[i]
            );
        }
    }
}

#[test]
fn kkt_conditions_hold_on_larger_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let n = 20;
        let h = random_pd(n, &mut rng);
        let q = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let bounds = BoxConstraints::uniform(n, -0.4, 0.6).unwrap();
        let x = solve_box_qp(&h, &q, &bounds).unwrap();
        assert!(bounds.contains(&x, 0.0));
        let g = h * &x + q;
        for i in 0..n {
            let at_lower = (x[i] + 0.4).abs() < 1e-10;
            let at_upper = (x[i] - 0.6).abs() < 1e-10;
            if at_lower {
                assert!(g[i] >= -1e-8, "lower-bound dual violated at {i}: {}", g[i]);
            } else if at_upper {
                assert!(g[i] <= 1e-8, "upper-bound dual violated at {i}: {}", g[i]);
            } else {
                assert!(g[i].abs() <= 1e-8, "interior gradient at {i}: {}", g[i]);
            }
        }
    }
}
