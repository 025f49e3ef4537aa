//! The three benchmark systems, their reference settings, and the named
//! target profiles each one is evaluated against.
//!
//! Everything an experiment needs — PDE coefficients, grid, control basis,
//! bounds, objective weights, receding horizons, and the desk-scale network
//! and training settings for the learned methods — is resolved here from
//! `(system, target)` names so that every consumer (CLI, suite runner,
//! tests) works from one set of numbers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use oclab_control::{BurgersProblem, HeatProblem, VoltageProblem};
use oclab_core::{
    BasisKind, BasisSet, BoxBounds, ObjectiveWeights, SpaceTimeGrid, TargetProfile,
};
use oclab_neural::{Activation, OperatorTrainOptions, PdeopOptions};
use oclab_solvers::{BurgersParams, ReactionDiffusionParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

/// Which benchmark PDE a run works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemId {
    /// Linear reaction–diffusion with one static spatial control.
    Voltage,
    /// Linear reaction–diffusion with time-varying cosine-basis weights.
    Heat,
    /// Viscous Burgers with time-varying sine-basis weights.
    Burgers,
}

/// How the control is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    /// Black-box optimization with finite-difference gradients.
    Direct,
    /// Discrete-adjoint gradients (open loop on voltage and Burgers,
    /// receding horizon on heat).
    Adjoint,
    /// Linear MPC: dense condensed box QP per step.
    Lmpc,
    /// Nonlinear MPC: per-step horizon optimization on the implicit solver.
    Nmpc,
    /// The trained operator/controller pair, deployed in closed loop.
    Pdeop,
}

/// Named terminal target profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetId {
    Constant,
    Ramp,
    Sine,
    Parabola,
    Zero,
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemId::Voltage => "voltage",
            SystemId::Heat => "heat",
            SystemId::Burgers => "burgers",
        })
    }
}

impl FromStr for SystemId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "voltage" => Ok(SystemId::Voltage),
            "heat" => Ok(SystemId::Heat),
            "burgers" => Ok(SystemId::Burgers),
            other => Err(BenchError::Config(format!(
                "unknown system `{other}` (expected voltage, heat, or burgers)"
            ))),
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodId::Direct => "direct",
            MethodId::Adjoint => "adjoint",
            MethodId::Lmpc => "lmpc",
            MethodId::Nmpc => "nmpc",
            MethodId::Pdeop => "pdeop",
        })
    }
}

impl FromStr for MethodId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(MethodId::Direct),
            "adjoint" => Ok(MethodId::Adjoint),
            "lmpc" => Ok(MethodId::Lmpc),
            "nmpc" => Ok(MethodId::Nmpc),
            "pdeop" => Ok(MethodId::Pdeop),
            other => Err(BenchError::Config(format!(
                "unknown method `{other}` (expected direct, adjoint, lmpc, nmpc, or pdeop)"
            ))),
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetId::Constant => "constant",
            TargetId::Ramp => "ramp",
            TargetId::Sine => "sine",
            TargetId::Parabola => "parabola",
            TargetId::Zero => "zero",
        })
    }
}

impl FromStr for TargetId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(TargetId::Constant),
            "ramp" => Ok(TargetId::Ramp),
            "sine" => Ok(TargetId::Sine),
            "parabola" => Ok(TargetId::Parabola),
            "zero" => Ok(TargetId::Zero),
            other => Err(BenchError::Config(format!(
                "unknown target `{other}` (expected constant, ramp, sine, parabola, or zero)"
            ))),
        }
    }
}

impl SystemId {
    pub const ALL: [SystemId; 3] = [SystemId::Voltage, SystemId::Heat, SystemId::Burgers];

    /// Reference spatial resolution.
    pub fn default_n(self) -> usize {
        match self {
            SystemId::Voltage => 101,
            SystemId::Heat => 41,
            SystemId::Burgers => 81,
        }
    }

    /// Reference number of time steps.
    pub fn default_steps(self) -> usize {
        match self {
            SystemId::Voltage => 101,
            SystemId::Heat => 41,
            SystemId::Burgers => 200,
        }
    }

    /// Final time of the reference horizon.
    pub fn final_time(self) -> f64 {
        match self {
            SystemId::Voltage => 5.0,
            SystemId::Heat => 1.0,
            SystemId::Burgers => 4.0,
        }
    }

    /// Domain length (all benchmarks use the unit interval).
    pub fn length(self) -> f64 {
        1.0
    }

    /// Actuator box shared by every method on this system.
    pub fn bounds(self) -> BoxBounds {
        BoxBounds::new(-1.0, 1.0).expect("static bounds")
    }

    /// The control basis for weight-driven systems; `None` on voltage,
    /// whose control is the spatial field itself.
    pub fn basis(self) -> Option<BasisSet> {
        match self {
            SystemId::Voltage => None,
            SystemId::Heat => Some(BasisSet::new(BasisKind::Cosine, 6, self.length()).expect("basis")),
            SystemId::Burgers => {
                Some(BasisSet::new(BasisKind::Sine, 4, self.length()).expect("basis"))
            }
        }
    }

    /// Width of one control input: `n` for the static field, `M` for
    /// basis weights.
    pub fn input_dim(self, n: usize) -> usize {
        match self.basis() {
            None => n,
            Some(basis) => basis.modes(),
        }
    }

    /// Reporting objective weights `(λ_run, γ)`.
    pub fn objective_weights(self) -> ObjectiveWeights {
        match self {
            SystemId::Voltage => ObjectiveWeights::new(0.0, 1e-4),
            SystemId::Heat => ObjectiveWeights::new(1.0, 1e-4),
            SystemId::Burgers => ObjectiveWeights::new(1.0, 1e-3),
        }
        .expect("static weights")
    }

    /// Space–time grid at the given resolution.
    pub fn grid(self, n: usize, steps: usize) -> Result<SpaceTimeGrid, BenchError> {
        Ok(SpaceTimeGrid::new(
            self.length(),
            n,
            self.final_time(),
            steps,
        )?)
    }

    /// Reaction–diffusion coefficients of the linear systems.
    pub fn reaction_diffusion_params(self, n: usize) -> Option<ReactionDiffusionParams> {
        match self {
            SystemId::Voltage => Some(
                ReactionDiffusionParams::with_uniform_reference(0.1, 1.0, 2.0, 1.0, n)
                    .expect("static params"),
            ),
            SystemId::Heat => Some(
                ReactionDiffusionParams::with_uniform_reference(0.1, 0.5, 2.0, 0.0, n)
                    .expect("static params"),
            ),
            SystemId::Burgers => None,
        }
    }

    /// Viscosity of the Burgers benchmark.
    pub fn burgers_params(self) -> Option<BurgersParams> {
        match self {
            SystemId::Burgers => Some(BurgersParams::new(0.03).expect("static params")),
            _ => None,
        }
    }

    /// Which named targets this system is benchmarked on.
    pub fn targets(self) -> &'static [TargetId] {
        match self {
            SystemId::Voltage | SystemId::Heat => {
                &[TargetId::Constant, TargetId::Ramp, TargetId::Sine]
            }
            SystemId::Burgers => &[TargetId::Sine, TargetId::Parabola, TargetId::Zero],
        }
    }

    /// The benchmark profile behind a target name on this system.
    pub fn target_profile(self, target: TargetId) -> Result<TargetProfile, BenchError> {
        let profile = match (self, target) {
            (SystemId::Voltage, TargetId::Constant) => TargetProfile::Constant(1.0),
            (SystemId::Voltage, TargetId::Ramp) => TargetProfile::Ramp(1.0, 0.5),
            (SystemId::Voltage, TargetId::Sine) => TargetProfile::Sine {
                p1: 1.0,
                p2: 0.2,
                p3: 0.0,
                f0: 6.0,
            },
            (SystemId::Heat, TargetId::Constant) => TargetProfile::Constant(1.0),
            (SystemId::Heat, TargetId::Ramp) => TargetProfile::Ramp(1.0, 0.5),
            (SystemId::Heat, TargetId::Sine) => TargetProfile::Sine {
                p1: 0.6,
                p2: 0.3,
                p3: 0.0,
                f0: 2.0,
            },
            (SystemId::Burgers, TargetId::Sine) => TargetProfile::Sine {
                p1: 0.0,
                p2: 0.8,
                p3: 0.0,
                f0: PI,
            },
            (SystemId::Burgers, TargetId::Parabola) => TargetProfile::Parabola(2.0),
            (SystemId::Burgers, TargetId::Zero) => TargetProfile::Constant(0.0),
            (system, target) => {
                return Err(BenchError::Config(format!(
                    "target `{target}` is not defined for system `{system}`"
                )))
            }
        };
        Ok(profile)
    }

    /// Which methods are defined on this system.
    pub fn supports(self, method: MethodId) -> bool {
        match method {
            MethodId::Direct => self == SystemId::Voltage,
            MethodId::Lmpc => self == SystemId::Heat,
            MethodId::Nmpc => self == SystemId::Burgers,
            MethodId::Adjoint | MethodId::Pdeop => true,
        }
    }

    /// The classical methods run by the `baseline` command, in table order.
    pub fn classical_methods(self) -> &'static [MethodId] {
        match self {
            SystemId::Voltage => &[MethodId::Direct, MethodId::Adjoint],
            SystemId::Heat => &[MethodId::Lmpc, MethodId::Adjoint],
            SystemId::Burgers => &[MethodId::Nmpc, MethodId::Adjoint],
        }
    }
}

impl MethodId {
    /// True for methods that re-solve a horizon at every plant step and so
    /// take a `horizon` option.
    pub fn is_receding(self, system: SystemId) -> bool {
        match self {
            MethodId::Lmpc | MethodId::Nmpc => true,
            MethodId::Adjoint => system == SystemId::Heat,
            MethodId::Direct | MethodId::Pdeop => false,
        }
    }
}

/// Builds the static-control tracking problem at the given resolution.
pub fn voltage_problem(
    target: TargetId,
    n: usize,
    steps: usize,
) -> Result<VoltageProblem, BenchError> {
    let system = SystemId::Voltage;
    let grid = system.grid(n, steps)?;
    let params = system.reaction_diffusion_params(n).expect("linear system");
    Ok(VoltageProblem::new(
        params,
        grid,
        system.target_profile(target)?,
        system.objective_weights().gamma,
        system.bounds(),
    )?)
}

/// Builds the basis-weighted heat tracking problem at the given resolution.
pub fn heat_problem(target: TargetId, n: usize, steps: usize) -> Result<HeatProblem, BenchError> {
    let system = SystemId::Heat;
    let grid = system.grid(n, steps)?;
    let params = system.reaction_diffusion_params(n).expect("linear system");
    Ok(HeatProblem::new(
        params,
        grid,
        system.basis().expect("weighted system"),
        system.target_profile(target)?,
        system.objective_weights(),
        system.bounds(),
    ))
}

/// Builds the Burgers tracking problem at the given resolution.
pub fn burgers_problem(
    target: TargetId,
    n: usize,
    steps: usize,
) -> Result<BurgersProblem, BenchError> {
    let system = SystemId::Burgers;
    let grid = system.grid(n, steps)?;
    Ok(BurgersProblem::new(
        system.burgers_params().expect("burgers system"),
        grid,
        system.basis().expect("weighted system"),
        system.target_profile(target)?,
        system.objective_weights().gamma,
        system.bounds(),
    ))
}

/// Desk-scale learning settings for one system: network shapes, dataset
/// size, and the two training schedules.
#[derive(Debug, Clone)]
pub struct LearnScale {
    pub activation: Activation,
    pub branch_hidden: Vec<usize>,
    pub trunk_hidden: Vec<usize>,
    pub feature_dim: usize,
    /// Hidden sizes of the controller (dense layers on voltage, recurrent
    /// cells elsewhere).
    pub controller_hidden: Vec<usize>,
    /// Trajectories drawn for the one-step dataset.
    pub dataset_trajectories: usize,
    /// Control-field prior: `(variance, length_scale)`.
    pub grf: (f64, f64),
    pub operator: OperatorTrainOptions,
    pub pdeop: PdeopOptions,
}

/// The desk-scale settings used by the pipeline and the benchmark suite.
pub fn learn_scale(system: SystemId) -> LearnScale {
    match system {
        SystemId::Voltage => LearnScale {
            activation: Activation::Silu,
            branch_hidden: vec![128, 128, 128],
            trunk_hidden: vec![128, 128, 128],
            feature_dim: 64,
            controller_hidden: vec![128, 128],
            dataset_trajectories: 220,
            grf: (0.25, 0.25),
            operator: OperatorTrainOptions {
                epochs: 160,
                batch_size: 128,
                lr: 1e-3,
                lr_decay: 0.985,
                weight_decay: 1e-6,
                seed: 11,
                samples_per_epoch: Some(8192),
                validation_cap: Some(1500),
            },
            pdeop: PdeopOptions {
                epochs: 260,
                batch: 8,
                lr_controller: 2e-3,
                lr_operator: 1e-4,
                weight_decay: 0.0,
                rho: 0.05,
                probe_period: 5,
                probes_per_epoch: 16,
                seed: 17,
                divergence_limit: 1e7,
            },
        },
        SystemId::Heat => LearnScale {
            activation: Activation::Relu,
            branch_hidden: vec![128, 128, 128],
            trunk_hidden: vec![128, 128, 128],
            feature_dim: 64,
            controller_hidden: vec![96, 96],
            dataset_trajectories: 400,
            grf: (0.25, 0.3),
            operator: OperatorTrainOptions {
                epochs: 220,
                batch_size: 128,
                lr: 1.5e-3,
                lr_decay: 0.985,
                weight_decay: 1e-6,
                seed: 11,
                samples_per_epoch: Some(8192),
                validation_cap: Some(1500),
            },
            pdeop: PdeopOptions {
                epochs: 300,
                batch: 6,
                lr_controller: 2e-3,
                lr_operator: 1e-4,
                weight_decay: 0.0,
                rho: 0.05,
                probe_period: 5,
                probes_per_epoch: 18,
                seed: 17,
                divergence_limit: 1e7,
            },
        },
        SystemId::Burgers => LearnScale {
            activation: Activation::Relu,
            branch_hidden: vec![128, 128],
            trunk_hidden: vec![128, 128, 128],
            feature_dim: 64,
            controller_hidden: vec![96, 96],
            dataset_trajectories: 90,
            grf: (0.2, 0.3),
            operator: OperatorTrainOptions {
                epochs: 160,
                batch_size: 128,
                lr: 1.5e-3,
                lr_decay: 0.985,
                weight_decay: 1e-6,
                seed: 11,
                samples_per_epoch: Some(8192),
                validation_cap: Some(1500),
            },
            pdeop: PdeopOptions {
                epochs: 200,
                batch: 4,
                lr_controller: 1.5e-3,
                lr_operator: 1e-4,
                weight_decay: 0.0,
                rho: 0.05,
                probe_period: 5,
                probes_per_epoch: 12,
                seed: 17,
                divergence_limit: 1e7,
            },
        },
    }
}

/// Samples the training pool of target profiles for closed-loop training.
///
/// The pool mixes the parametric families the benchmarks are drawn from —
/// constants, ramps, and sines on the linear systems; sine-mode
/// combinations, scaled parabolas, and rest states on Burgers — so the
/// named benchmark targets are in-distribution without being oversampled.
pub fn training_targets(
    system: SystemId,
    grid: &SpaceTimeGrid,
    count: usize,
    seed: u64,
) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = grid.xs().to_vec();
    let mut pool = Vec::with_capacity(count);
    for _ in 0..count {
        let profile: Box<dyn Fn(f64) -> f64> = match system {
            SystemId::Voltage | SystemId::Heat => match rng.gen_range(0..3u8) {
                0 => {
                    let a = rng.gen_range(0.3..1.2);
                    Box::new(move |_| a)
                }
                1 => {
                    let a = rng.gen_range(0.2..1.2);
                    let b = rng.gen_range(0.0..0.6);
                    Box::new(move |x| a * x + b)
                }
                _ => {
                    let a = rng.gen_range(0.4..1.1);
                    let b = rng.gen_range(0.1..0.4);
                    let w = rng.gen_range(1.0..7.0);
                    let phase = rng.gen_range(0.0..PI);
                    Box::new(move |x| a + b * (w * x + phase).sin())
                }
            },
            SystemId::Burgers => match rng.gen_range(0..3u8) {
                0 => {
                    let a1 = rng.gen_range(-0.9..0.9);
                    let a2 = rng.gen_range(-0.4..0.4);
                    let a3 = rng.gen_range(-0.2..0.2);
                    Box::new(move |x| {
                        a1 * (PI * x).sin() + a2 * (2.0 * PI * x).sin() + a3 * (3.0 * PI * x).sin()
                    })
                }
                1 => {
                    let a = rng.gen_range(0.5..2.2);
                    Box::new(move |x| a * x * (1.0 - x))
                }
                _ => {
                    let a = rng.gen_range(0.0..0.3);
                    Box::new(move |x| a * (PI * x).sin())
                }
            },
        };
        pool.push(DVector::from_iterator(
            xs.len(),
            xs.iter().map(|&x| profile(x)),
        ));
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_compatibility_matrix() {
        assert!(SystemId::Voltage.supports(MethodId::Direct));
        assert!(!SystemId::Heat.supports(MethodId::Direct));
        assert!(!SystemId::Burgers.supports(MethodId::Direct));
        assert!(SystemId::Heat.supports(MethodId::Lmpc));
        assert!(!SystemId::Voltage.supports(MethodId::Lmpc));
        assert!(SystemId::Burgers.supports(MethodId::Nmpc));
        assert!(!SystemId::Heat.supports(MethodId::Nmpc));
        for system in SystemId::ALL {
            assert!(system.supports(MethodId::Adjoint));
            assert!(system.supports(MethodId::Pdeop));
        }
    }

    #[test]
    fn burgers_targets_respect_the_boundary() {
        let system = SystemId::Burgers;
        let grid = system.grid(11, 10).unwrap();
        for &target in system.targets() {
            let t = system.target_profile(target).unwrap().evaluate(&grid);
            assert!(t[0].abs() < 1e-12 && t[10].abs() < 1e-12, "{target}");
        }
        assert!(system.target_profile(TargetId::Constant).is_err());
    }

    #[test]
    fn training_pool_is_seeded_and_sized() {
        let grid = SystemId::Heat.grid(11, 8).unwrap();
        let a = training_targets(SystemId::Heat, &grid, 12, 3);
        let b = training_targets(SystemId::Heat, &grid, 12, 3);
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }
}
