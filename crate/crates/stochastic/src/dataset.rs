use nalgebra::{DMatrix, DVector};
use oclab_core::{BasisSet, BoxBounds, ControlField, SpaceTimeGrid, StateTrajectory};
use oclab_solvers::{
    build_cn_operator, rollout_burgers, rollout_linear, BurgersParams, CnInputKind, CnOperator,
    ReactionDiffusionParams, SolverError,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::StochasticError;
use crate::grf::{sample_grf, GrfKernel};

/// Which benchmark system a dataset was generated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Reaction–diffusion with a static spatial control.
    VoltageStatic,
    /// Reaction–diffusion with time-varying cosine-basis weights.
    Heat,
    /// Viscous Burgers with time-varying sine-basis weights.
    Burgers,
}

impl SystemKind {
    pub fn label(&self) -> &'static str {
        match self {
            SystemKind::VoltageStatic => "voltage",
            SystemKind::Heat => "heat",
            SystemKind::Burgers => "burgers",
        }
    }
}

/// Dataset partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One generated trajectory: the sampled control and the solver rollout.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub id: usize,
    pub split: Split,
    pub seed: u64,
    /// Static systems: `1×n` control profile. Weighted systems: `N_t×M`
    /// per-step weights (left-endpoint convention).
    pub control: DMatrix<f64>,
    pub trajectory: StateTrajectory,
}

/// A one-step transition `(y_k, input_k, y_{k+1})` extracted from a record.
#[derive(Debug, Clone)]
pub struct OneStepSample {
    pub state: DVector<f64>,
    pub input: DVector<f64>,
    pub next_state: DVector<f64>,
}

/// A generated dataset with generation diagnostics.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub system: SystemKind,
    pub grid: SpaceTimeGrid,
    pub records: Vec<TrajectoryRecord>,
    /// Fraction of control entries that hit the clipping bound.
    pub clipped_fraction: f64,
    /// Trajectories that had to be re-drawn after solver failures.
    pub resampled: usize,
}

impl Dataset {
    /// Records belonging to one split.
    pub fn split(&self, split: Split) -> impl Iterator<Item = &TrajectoryRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Materializes every one-step transition of a split.
    ///
    /// For static systems the input of every step is the trajectory's
    /// control profile; for weighted systems it is that step's weight row.
    pub fn one_step_samples(&self, split: Split) -> Vec<OneStepSample> {
        let steps = self.grid.steps();
        let mut out = Vec::new();
        for rec in self.split(split) {
            for k in 0..steps {
                let input = if rec.control.nrows() == 1 {
                    rec.control.row(0).transpose()
                } else {
                    rec.control.row(k).transpose()
                };
                out.push(OneStepSample {
                    state: rec.trajectory.state(k),
                    input,
                    next_state: rec.trajectory.state(k + 1),
                });
            }
        }
        out
    }
}

/// SplitMix64 finalizer; decorrelates consecutive indices into seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives the stream seed for one trajectory (or sub-stream) of a run.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    base ^ splitmix64(index)
}

/// Salt that keeps the shuffle stream distinct from trajectory streams.
const SPLIT_SALT: u64 = 0x5717_ab1e_0000_0001;

/// Deterministic 80/10/10 split: indices are shuffled with a seeded
/// generator, the first 80% become training, the next 10% validation, the
/// rest test.
fn assign_splits(count: usize, base_seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base_seed, SPLIT_SALT));
    order.shuffle(&mut rng);
    let n_train = count * 8 / 10;
    let n_valid = count / 10;
    let mut splits = vec![Split::Test; count];
    for (rank, &idx) in order.iter().enumerate() {
        splits[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_valid {
            Split::Validation
        } else {
            Split::Test
        };
    }
    splits
}

/// Clips every entry into the box, returning how many entries moved.
fn clip_count(values: &mut DMatrix<f64>, bounds: &BoxBounds) -> usize {
    let mut clipped = 0;
    for v in values.iter_mut() {
        let c = bounds.clamp(*v);
        if c != *v {
            clipped += 1;
        }
        *v = c;
    }
    clipped
}

/// Samples `count` static spatial controls from the field, clips them to
/// `bounds`, rolls each through the linear solver from `y0 = 0`, and splits
/// the results 80/10/10.
pub fn generate_static_control_dataset(
    count: usize,
    kernel: &GrfKernel,
    bounds: &BoxBounds,
    params: &ReactionDiffusionParams,
    grid: &SpaceTimeGrid,
    seed: u64,
) -> Result<Dataset, StochasticError> {
    assert!(count >= 10, "need at least 10 trajectories for a split");
    let op = build_cn_operator(params, grid, CnInputKind::Static)?;
    let splits = assign_splits(count, seed);
    let y0 = DVector::zeros(grid.n());

    let results: Vec<Result<(TrajectoryRecord, usize), StochasticError>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let traj_seed = mix_seed(seed, i as u64 + 1);
            let draw = sample_grf(kernel, grid.xs(), traj_seed)?;
            let mut control = DMatrix::from_fn(1, grid.n(), |_, j| draw[j]);
            let clipped = clip_count(&mut control, bounds);
            let u = control.row(0).transpose();
            let trajectory = rollout_linear(&op, &y0, &ControlField::Static(u))?;
            Ok((
                TrajectoryRecord {
                    id: i,
                    split: splits[i],
                    seed: traj_seed,
                    control,
                    trajectory,
                },
                clipped,
            ))
        })
        .collect();

    let mut records = Vec::with_capacity(count);
    let mut clipped_total = 0usize;
    for r in results {
        let (rec, clipped) = r?;
        clipped_total += clipped;
        records.push(rec);
    }
    Ok(Dataset {
        system: SystemKind::VoltageStatic,
        grid: grid.clone(),
        records,
        clipped_fraction: clipped_total as f64 / (count * grid.n()) as f64,
        resampled: 0,
    })
}

/// The dynamics a weight-trajectory dataset is rolled through.
#[derive(Debug, Clone, Copy)]
pub enum WeightSystem<'a> {
    Heat(&'a ReactionDiffusionParams),
    Burgers(&'a BurgersParams),
}

/// Samples `count` weight trajectories (`M` independent temporal field
/// draws per trajectory, one per basis mode), clips them to `bounds`, and
/// rolls each through the matching solver from `y0 = 0`.
///
/// The weights follow the left-endpoint convention: row `k` is held over
/// `[t_k, t_{k+1})`, giving an `N_t×M` matrix. Burgers Newton failures are
/// re-drawn with a derived seed up to 5 times; the count of re-draws is
/// reported on the dataset.
pub fn generate_weight_trajectory_dataset(
    count: usize,
    kernel: &GrfKernel,
    bounds: &BoxBounds,
    basis: &BasisSet,
    system: WeightSystem<'_>,
    grid: &SpaceTimeGrid,
    seed: u64,
) -> Result<Dataset, StochasticError> {
    assert!(count >= 10, "need at least 10 trajectories for a split");
    let splits = assign_splits(count, seed);
    let steps = grid.steps();
    let m = basis.modes();
    let times: Vec<f64> = (0..steps).map(|k| grid.time(k)).collect();
    let y0 = DVector::zeros(grid.n());

    // Heat shares one precomputed operator; Burgers steps are stateless.
    let heat_op: Option<CnOperator> = match system {
        WeightSystem::Heat(params) => Some(build_cn_operator(
            params,
            grid,
            CnInputKind::Basis(basis.clone()),
        )?),
        WeightSystem::Burgers(_) => None,
    };

    let run = |weights: DMatrix<f64>| -> Result<StateTrajectory, SolverError> {
        match system {
            WeightSystem::Heat(_) => rollout_linear(
                heat_op.as_ref().expect("heat operator"),
                &y0,
                &ControlField::Weighted {
                    weights,
                    basis: basis.clone(),
                },
            ),
            WeightSystem::Burgers(params) => rollout_burgers(&y0, &weights, basis, params, grid),
        }
    };

    let results: Vec<Result<(TrajectoryRecord, usize, usize), StochasticError>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut attempt = 0usize;
            loop {
                let traj_seed = mix_seed(seed, (i + attempt * count) as u64 + 1);
                let mut weights = DMatrix::zeros(steps, m);
                for j in 0..m {
                    let draw = sample_grf(kernel, &times, mix_seed(traj_seed, j as u64))?;
                    weights.column_mut(j).copy_from(&draw);
                }
                let clipped = clip_count(&mut weights, bounds);
                match run(weights.clone()) {
                    Ok(trajectory) => {
                        return Ok((
                            TrajectoryRecord {
                                id: i,
                                split: splits[i],
                                seed: traj_seed,
                                control: weights,
                                trajectory,
                            },
                            clipped,
                            attempt,
                        ))
                    }
                    Err(err) => {
                        attempt += 1;
                        if attempt > 5 {
                            return Err(StochasticError::ResamplingExhausted {
                                index: i,
                                attempts: attempt,
                                last: err.to_string(),
                            });
                        }
                    }
                }
            }
        })
        .collect();

    let mut records = Vec::with_capacity(count);
    let mut clipped_total = 0usize;
    let mut resampled = 0usize;
    for r in results {
        let (rec, clipped, attempts) = r?;
        clipped_total += clipped;
        resampled += attempts;
        records.push(rec);
    }
    Ok(Dataset {
        system: match system {
            WeightSystem::Heat(_) => SystemKind::Heat,
            WeightSystem::Burgers(_) => SystemKind::Burgers,
        },
        grid: grid.clone(),
        records,
        clipped_fraction: clipped_total as f64 / (count * steps * m) as f64,
        resampled,
    })
}
