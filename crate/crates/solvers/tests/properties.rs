//! Property tests: affine structure of the linear rollout and round-trips
//! of the file formats.

use nalgebra::{DMatrix, DVector};
use oclab_core::{ControlField, SpaceTimeGrid, StateTrajectory};
use oclab_solvers::{
    build_cn_operator, read_tensor, rollout_linear, write_tensor, write_trajectory_csv,
    CnInputKind, ReactionDiffusionParams,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// rollout(a·u1 + b·u2) = a·rollout(u1) + b·rollout(u2) + (1−a−b)·rollout(0):
    /// the step map is affine, so control superposition holds exactly up to
    /// the shared drift response.
    #[test]
    fn linear_rollout_is_affine_in_the_control(
        u1 in proptest::collection::vec(-1.0f64..1.0, 21),
        u2 in proptest::collection::vec(-1.0f64..1.0, 21),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let grid = SpaceTimeGrid::new(1.0, 21, 1.0, 8).unwrap();
        let params =
            ReactionDiffusionParams::with_uniform_reference(0.1, 1.0, 2.0, 1.0, 21).unwrap();
        let op = build_cn_operator(&params, &grid, CnInputKind::Static).unwrap();
        let y0 = DVector::from_fn(21, |i, _| 0.1 * (i as f64).sin());
        let run = |u: DVector<f64>| {
            rollout_linear(&op, &y0, &ControlField::Static(u)).unwrap()
        };
        let u1 = DVector::from_vec(u1);
        let u2 = DVector::from_vec(u2);
        let mixed = run(&u1 * a + &u2 * b);
        let t1 = run(u1);
        let t2 = run(u2);
        let t0 = run(DVector::zeros(21));
        for k in 0..=8 {
            for i in 0..21 {
                let expect = a * t1.values()[(k, i)]
                    + b * t2.values()[(k, i)]
                    + (1.0 - a - b) * t0.values()[(k, i)];
                prop_assert!((mixed.values()[(k, i)] - expect).abs() < 1e-9);
            }
        }
    }

    /// Binary tensors round-trip exactly.
    #[test]
    fn tensor_round_trip(data in proptest::collection::vec(-1e6f64..1e6, 1..60)) {
        let dir = std::env::temp_dir().join("oclab-tensor-prop");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("t{}.bin", data.len()));
        let dims = vec![data.len()];
        write_tensor(&path, &dims, &data).unwrap();
        let (rdims, rdata) = read_tensor(&path).unwrap();
        prop_assert_eq!(rdims, dims);
        for (x, y) in rdata.iter().zip(data.iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }
}

#[test]
fn tensor_rejects_wrong_sizes_and_bad_magic() {
    let dir = std::env::temp_dir().join("oclab-tensor-neg");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.bin");
    assert!(write_tensor(&path, &[2, 3], &[0.0; 5]).is_err());
    std::fs::write(&path, b"NOTATENSOR______").unwrap();
    assert!(read_tensor(&path).is_err());
    std::fs::remove_file(&path).ok();
}

#[test]
fn trajectory_csv_layout() {
    let grid = SpaceTimeGrid::new(1.0, 3, 1.0, 2).unwrap();
    let traj =
        StateTrajectory::new(grid, DMatrix::from_fn(3, 3, |k, i| (k * 3 + i) as f64)).unwrap();
    let dir = std::env::temp_dir().join("oclab-csv");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("traj.csv");
    write_trajectory_csv(&path, &traj).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y");
    assert_eq!(lines.len(), 1 + 9);
    assert_eq!(lines[1], "0,0,0");
    // Last row: t = 1, x = 1, y = 8.
    assert_eq!(lines[9], "1,1,8");
    std::fs::remove_file(&path).ok();
}
