//! The generation pipeline: datasets, supervised operator fits, and the
//! jointly trained controller/operator pairs, laid out on disk per system.
//!
//! ```text
//! {root}/
//!   voltage/ | heat/ | burgers/
//!     dataset/            sampled control trajectories + rollouts
//!     operator.ckpt       supervised one-step operator
//!     operator_loss.csv   its training curve
//!     controller.ckpt     closed-loop-trained controller
//!     operator_joint.ckpt operator after joint refinement
//!     pdeop_history.csv   closed-loop training history
//! ```
//!
//! Every stage is idempotent: it returns without working when its outputs
//! already exist, unless `force` is set. Errors carry the stage label.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use oclab_neural::{
    load_operator, save_controller, save_operator, train_operator, train_pdeop, write_loss_csv,
    write_pdeop_history_csv, OperatorNet, PdeopReport, PdeopTask, Plant, SurrogateController,
};
use oclab_stochastic::{
    generate_static_control_dataset, generate_weight_trajectory_dataset, load_dataset,
    save_dataset, Dataset, GrfKernel, WeightSystem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::BenchError;
use crate::systems::{learn_scale, training_targets, SystemId};

/// Where the pipeline keeps its outputs.
#[derive(Debug, Clone)]
pub struct ArtifactPaths {
    root: PathBuf,
}

impl ArtifactPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn system_dir(&self, system: SystemId) -> PathBuf {
        self.root.join(system.to_string())
    }

    pub fn dataset_dir(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("dataset")
    }

    pub fn operator(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("operator.ckpt")
    }

    pub fn operator_loss(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("operator_loss.csv")
    }

    pub fn controller(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("controller.ckpt")
    }

    pub fn operator_joint(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("operator_joint.ckpt")
    }

    pub fn pdeop_history(&self, system: SystemId) -> PathBuf {
        self.system_dir(system).join("pdeop_history.csv")
    }
}

/// What a pipeline stage did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    /// Outputs were produced in this call.
    Built,
    /// Outputs already existed and `force` was not set.
    Skipped,
}

/// Samples the training dataset for one system and saves it under the
/// artifact root. The control prior is the system's Gaussian random field
/// clipped to the actuator box.
pub fn gen_data(
    system: SystemId,
    paths: &ArtifactPaths,
    seed: u64,
    force: bool,
) -> Result<StageOutcome, BenchError> {
    let stage = format!("gen-data {system}");
    let dir = paths.dataset_dir(system);
    if dir.join("meta.json").exists() && !force {
        return Ok(StageOutcome::Skipped);
    }
    let scale = learn_scale(system);
    let n = system.default_n();
    let steps = system.default_steps();
    let build = || -> Result<Dataset, BenchError> {
        let grid = system.grid(n, steps)?;
        let kernel = GrfKernel::new(scale.grf.0, scale.grf.1)?;
        let bounds = system.bounds();
        let count = scale.dataset_trajectories;
        let dataset = match system {
            SystemId::Voltage => {
                let params = system.reaction_diffusion_params(n).expect("linear");
                generate_static_control_dataset(count, &kernel, &bounds, &params, &grid, seed)?
            }
            SystemId::Heat => {
                let params = system.reaction_diffusion_params(n).expect("linear");
                generate_weight_trajectory_dataset(
                    count,
                    &kernel,
                    &bounds,
                    &system.basis().expect("weighted"),
                    WeightSystem::Heat(&params),
                    &grid,
                    seed,
                )?
            }
            SystemId::Burgers => {
                let params = system.burgers_params().expect("burgers");
                generate_weight_trajectory_dataset(
                    count,
                    &kernel,
                    &bounds,
                    &system.basis().expect("weighted"),
                    WeightSystem::Burgers(&params),
                    &grid,
                    seed,
                )?
            }
        };
        Ok(dataset)
    };
    let dataset = build().map_err(|e| e.at_stage(&stage))?;
    save_dataset(&dataset, &dir).map_err(|e| BenchError::from(e).at_stage(&stage))?;
    Ok(StageOutcome::Built)
}

/// Fits the one-step operator to the stored dataset and checkpoints it with
/// its loss curve.
pub fn train_operator_stage(
    system: SystemId,
    paths: &ArtifactPaths,
    force: bool,
) -> Result<StageOutcome, BenchError> {
    let stage = format!("train-operator {system}");
    let ckpt = paths.operator(system);
    if ckpt.exists() && !force {
        return Ok(StageOutcome::Skipped);
    }
    let dataset_dir = paths.dataset_dir(system);
    if !dataset_dir.join("meta.json").exists() {
        return Err(BenchError::MissingArtifact(dataset_dir).at_stage(&stage));
    }

    let run = || -> Result<(), BenchError> {
        let dataset = load_dataset(&dataset_dir)?;
        let scale = learn_scale(system);
        let n = dataset.grid.n();
        let mut rng = ChaCha8Rng::seed_from_u64(scale.operator.seed);
        let mut net = OperatorNet::new(
            n,
            system.input_dim(n),
            &scale.branch_hidden,
            &scale.trunk_hidden,
            scale.feature_dim,
            scale.activation,
            &mut rng,
        )?;
        let start = Instant::now();
        let report = train_operator(&mut net, &dataset, &scale.operator)?;
        let train_s = start.elapsed().as_secs_f64();
        let metadata = serde_json::json!({
            "system": system.to_string(),
            "best_epoch": report.best_epoch,
            "best_valid": report.best_valid,
            "train_s": train_s,
        });
        save_operator(&ckpt, &net, &metadata)?;
        write_loss_csv(&paths.operator_loss(system), &report)?;
        Ok(())
    };
    run().map_err(|e| e.at_stage(&stage))?;
    Ok(StageOutcome::Built)
}

/// Builds the untrained controller for a system at desk scale.
pub fn fresh_controller(
    system: SystemId,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SurrogateController, BenchError> {
    let scale = learn_scale(system);
    let bounds = system.bounds();
    let (lo, hi) = (bounds.lower(), bounds.upper());
    let controller = match system.basis() {
        // Static spatial field: one dense forward from [y0; target].
        None => SurrogateController::new_static(
            n,
            &scale.controller_hidden,
            n,
            scale.activation,
            lo,
            hi,
            rng,
        )?,
        // Per-step basis weights: a recurrent cell over [y_k; target].
        Some(basis) => SurrogateController::new_recurrent(
            n,
            &scale.controller_hidden,
            basis.modes(),
            lo,
            hi,
            rng,
        )?,
    };
    Ok(controller)
}

/// Trains the controller against the supervised operator (jointly refining
/// it) and checkpoints both, plus the training history.
pub fn train_pdeop_stage(
    system: SystemId,
    paths: &ArtifactPaths,
    force: bool,
) -> Result<StageOutcome, BenchError> {
    let stage = format!("train-pdeop {system}");
    let ckpt = paths.controller(system);
    if ckpt.exists() && !force {
        return Ok(StageOutcome::Skipped);
    }
    let operator_ckpt = paths.operator(system);
    if !operator_ckpt.exists() {
        return Err(BenchError::MissingArtifact(operator_ckpt).at_stage(&stage));
    }

    let run = || -> Result<(), BenchError> {
        let (mut operator, _) = load_operator(&operator_ckpt)?;
        let scale = learn_scale(system);
        let n = operator.state_dim();
        let steps = system.default_steps();
        let grid = system.grid(n, steps)?;
        let mut rng = ChaCha8Rng::seed_from_u64(scale.pdeop.seed);
        let mut controller = fresh_controller(system, n, &mut rng)?;

        let targets = training_targets(system, &grid, 64, scale.pdeop.seed ^ 0x5eed);
        let linear_op = system
            .reaction_diffusion_params(n)
            .map(|params| {
                let problem_kind = match system.basis() {
                    None => oclab_solvers::CnInputKind::Static,
                    Some(basis) => oclab_solvers::CnInputKind::Basis(basis),
                };
                oclab_solvers::build_cn_operator(&params, &grid, problem_kind)
            })
            .transpose()?;
        let burgers_params = system.burgers_params();
        let basis = system.basis();
        let plant = match system {
            SystemId::Voltage | SystemId::Heat => {
                Plant::Linear(linear_op.as_ref().expect("linear"))
            }
            SystemId::Burgers => Plant::Burgers {
                params: burgers_params.as_ref().expect("burgers"),
                basis: basis.as_ref().expect("weighted"),
                grid: &grid,
            },
        };
        let task = PdeopTask {
            grid: &grid,
            plant,
            initial: DVector::zeros(n),
            weights: system.objective_weights(),
            targets,
        };
        let start = Instant::now();
        let report = train_pdeop(&mut controller, &mut operator, &task, &scale.pdeop)?;
        let train_s = start.elapsed().as_secs_f64();

        let metadata = pdeop_metadata(system, &report, train_s);
        save_controller(&ckpt, &controller, &metadata)?;
        save_operator(&paths.operator_joint(system), &operator, &metadata)?;
        write_pdeop_history_csv(&paths.pdeop_history(system), &report.history)?;
        Ok(())
    };
    run().map_err(|e| e.at_stage(&stage))?;
    Ok(StageOutcome::Built)
}

fn pdeop_metadata(system: SystemId, report: &PdeopReport, train_s: f64) -> serde_json::Value {
    let last = report.history.last();
    serde_json::json!({
        "system": system.to_string(),
        "epochs": report.history.len(),
        "final_objective": last.map(|r| r.objective),
        "final_terminal_mse": last.map(|r| r.terminal_mse),
        "multipliers_h": report.lagrange.multipliers_h(),
        "train_s": train_s,
    })
}

/// Runs the whole pipeline (data → operator → joint training) for the
/// given systems.
pub fn generate_all(
    systems: &[SystemId],
    paths: &ArtifactPaths,
    seed: u64,
    force: bool,
    mut progress: impl FnMut(&str, StageOutcome),
) -> Result<(), BenchError> {
    for &system in systems {
        let outcome = gen_data(system, paths, seed, force)?;
        progress(&format!("gen-data {system}"), outcome);
        let outcome = train_operator_stage(system, paths, force)?;
        progress(&format!("train-operator {system}"), outcome);
        let outcome = train_pdeop_stage(system, paths, force)?;
        progress(&format!("train-pdeop {system}"), outcome);
    }
    Ok(())
}
