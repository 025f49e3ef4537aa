//! Contract tests for the finite-difference gradients and the projected
//! quasi-Newton minimizer.

use nalgebra::DVector;
use oclab_optim::{fd_gradient, qn_minimize_box, BoxConstraints, FdScheme, QnOptions, QnStatus};
use std::cell::Cell;

#[test]
fn central_difference_of_square_is_exact() {
    // With ε a power of two (η = 2⁻²⁰, x = 3 → ε = 2⁻¹⁸), every intermediate
    // in ((x+ε)² − (x−ε)²)/(2ε) is exactly representable, so the central
    // difference of x² at 3 is exactly 6.
    let x = DVector::from_vec(vec![3.0]);
    let scheme = FdScheme::central().with_eta((2.0f64).powi(-20));
    let (g, evals) = fd_gradient(|v| v[0] * v[0], &x, &scheme).unwrap();
    assert_eq!(g[0], 6.0);
    assert_eq!(evals, 2);
}

#[test]
fn gradient_of_sum_is_all_ones_with_exact_counts() {
    let x = DVector::from_vec(vec![0.3, -1.7, 2.2, 0.0, 5.0]);
    let f = |v: &DVector<f64>| v.iter().sum::<f64>();

    let calls = Cell::new(0usize);
    let (g, evals) = fd_gradient(
        |v| {
            calls.set(calls.get() + 1);
            f(v)
        },
        &x,
        &FdScheme::forward(),
    )
    .unwrap();
    assert_eq!(evals, 6, "forward differences must cost n + 1");
    assert_eq!(calls.get(), 6);
    assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-9));

    calls.set(0);
    let (g, evals) = fd_gradient(
        |v| {
            calls.set(calls.get() + 1);
            f(v)
        },
        &x,
        &FdScheme::central(),
    )
    .unwrap();
    assert_eq!(evals, 10, "central differences must cost 2n");
    assert_eq!(calls.get(), 10);
    assert!(g.iter().all(|&v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn non_finite_objective_names_the_coordinate() {
    let x = DVector::from_vec(vec![0.0, 0.0, 0.0]);
    let err = fd_gradient(
        |v| if v[1] > 0.0 { f64::NAN } else { 0.0 },
        &x,
        &FdScheme::forward(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("coordinate 1"), "{err}");
}

#[test]
fn clipped_quadratic_hits_the_bound() {
    // min ‖x − 2‖² over [−1, 1]⁵ → all-ones, pinned at the upper bound.
    let f = |x: &DVector<f64>| {
        let d = x.map(|v| v - 2.0);
        (d.norm_squared(), 2.0 * d)
    };
    let bounds = BoxConstraints::uniform(5, -1.0, 1.0).unwrap();
    let res = qn_minimize_box(f, &DVector::zeros(5), &bounds, &QnOptions::default()).unwrap();
    for i in 0..5 {
        assert!((res.x[i] - 1.0).abs() < 1e-12, "x[{i}] = {}", res.x[i]);
    }
}

#[test]
fn interior_quadratic_reaches_exact_minimum() {
    let f = |x: &DVector<f64>| {
        let d = x.map(|v| v - 0.3);
        (d.norm_squared(), 2.0 * d)
    };
    let bounds = BoxConstraints::uniform(4, -1.0, 1.0).unwrap();
    let res = qn_minimize_box(f, &DVector::zeros(4), &bounds, &QnOptions::default()).unwrap();
    for i in 0..4 {
        assert!((res.x[i] - 0.3).abs() < 1e-8);
    }
}

#[test]
fn rosenbrock_in_a_box_converges() {
    let f = |x: &DVector<f64>| {
        let (a, b) = (x[0], x[1]);
        let fval = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = DVector::from_vec(vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ]);
        (fval, g)
    };
    let bounds = BoxConstraints::uniform(2, -2.0, 2.0).unwrap();
    let opts = QnOptions {
        max_iters: 200,
        ftol: 1e-14,
        gtol: 1e-10,
        ..QnOptions::default()
    };
    let res = qn_minimize_box(f, &DVector::from_vec(vec![-1.2, 1.0]), &bounds, &opts).unwrap();
    assert!(
        res.f <= 1e-8,
        "f* = {:.3e} after {} iterations ({:?})",
        res.f,
        res.iterations,
        res.status
    );
    assert!((res.x[0] - 1.0).abs() < 1e-3 && (res.x[1] - 1.0).abs() < 1e-3);
    assert!(res.iterations <= 200);
}

#[test]
fn iterates_stay_feasible_and_monotone() {
    // A rotated quadratic whose unconstrained minimum sits far outside the
    // box; every accepted iterate must stay inside and never increase f.
    let f = |x: &DVector<f64>| {
        let c = DVector::from_vec(vec![3.0, -4.0, 2.5]);
        let d = x - &c;
        let w = DVector::from_vec(vec![1.0, 10.0, 0.5]);
        let fval = 0.5 * d.iter().zip(w.iter()).map(|(a, b)| a * a * b).sum::<f64>();
        let g = DVector::from_fn(3, |i, _| w[i] * d[i]);
        (fval, g)
    };
    let bounds = BoxConstraints::uniform(3, -1.0, 1.0).unwrap();
    let res = qn_minimize_box(
        f,
        &DVector::from_vec(vec![0.9, -0.9, 0.0]),
        &bounds,
        &QnOptions::default(),
    )
    .unwrap();
    assert!(bounds.contains(&res.x, 0.0), "iterate escaped the box");
    for pair in res.trace.windows(2) {
        assert!(
            pair[1].f <= pair[0].f + 1e-15,
            "objective rose from {} to {}",
            pair[0].f,
            pair[1].f
        );
    }
    // The constrained optimum of this separable problem is (1, −1, 1).
    assert!((res.x[0] - 1.0).abs() < 1e-8);
    assert!((res.x[1] + 1.0).abs() < 1e-8);
    assert!((res.x[2] - 1.0).abs() < 1e-8);
    assert_eq!(res.status, QnStatus::GradientTolerance);
}
