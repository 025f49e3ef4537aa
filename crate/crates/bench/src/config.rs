//! The experiment configuration format.
//!
//! Configurations are plain `key = value` text. `#` starts a comment, blank
//! lines are ignored, keys may appear once, and any key outside the schema
//! is an error — a typo in a tolerance should fail loudly, not silently run
//! the defaults. The schema is versioned through the mandatory
//! `schema_version` key.
//!
//! ```text
//! # heat tracking with the condensed-QP controller
//! schema_version = 1
//! system  = heat            # voltage | heat | burgers
//! method  = lmpc            # direct | adjoint | lmpc | nmpc | pdeop
//! target  = sine            # constant | ramp | sine | parabola | zero
//! seed    = 0               # optional (default 0)
//! n       = 41              # optional grid override
//! steps   = 41              # optional grid override
//! horizon = 10              # optional, receding-horizon methods only
//! max_iters = 100           # optional optimizer cap (classical methods)
//! out = runs                # optional output directory
//! artifacts = runs/artifacts # optional, pdeop checkpoint directory
//! ```
//!
//! [`ExperimentConfig::resolve`] checks the method/system/target
//! compatibility matrix and fills system defaults; the resolved form has a
//! canonical rendering whose SHA-256 identifies the run in ledgers and
//! filenames.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::BenchError;
use crate::systems::{MethodId, SystemId, TargetId};

/// The schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A parsed configuration file, before defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    pub seed: u64,
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub horizon: Option<usize>,
    pub max_iters: Option<usize>,
    pub out: Option<PathBuf>,
    pub artifacts: Option<PathBuf>,
}

/// A validated configuration with every default filled in; what the runner
/// executes and the hash covers.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    pub seed: u64,
    pub n: usize,
    pub steps: usize,
    /// Receding-horizon length; `None` for open-loop methods and `pdeop`.
    pub horizon: Option<usize>,
    /// Outer iteration cap of the classical optimizers (inner cap for the
    /// receding methods); unused by `pdeop`.
    pub max_iters: usize,
    pub out: Option<PathBuf>,
    pub artifacts: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A configuration with every optional field unset.
    pub fn new(system: SystemId, method: MethodId, target: TargetId) -> Self {
        Self {
            system,
            method,
            target,
            seed: 0,
            n: None,
            steps: None,
            horizon: None,
            max_iters: None,
            out: None,
            artifacts: None,
        }
    }

    /// Parses the documented key-value format.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut schema_version: Option<u32> = None;
        let mut system: Option<SystemId> = None;
        let mut method: Option<MethodId> = None;
        let mut target: Option<TargetId> = None;
        let mut seed: Option<u64> = None;
        let mut n: Option<usize> = None;
        let mut steps: Option<usize> = None;
        let mut horizon: Option<usize> = None;
        let mut max_iters: Option<usize> = None;
        let mut out: Option<PathBuf> = None;
        let mut artifacts: Option<PathBuf> = None;

        fn set<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<(), BenchError> {
            if slot.is_some() {
                return Err(BenchError::Config(format!(
                    "line {line}: duplicate key `{key}`"
                )));
            }
            *slot = Some(value);
            Ok(())
        }

        fn int<T: FromStr>(value: &str, key: &str, line: usize) -> Result<T, BenchError> {
            value.parse().map_err(|_| {
                BenchError::Config(format!(
                    "line {line}: `{key}` expects an integer, got `{value}`"
                ))
            })
        }

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                BenchError::Config(format!("line {line}: expected `key = value`, got `{raw}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(BenchError::Config(format!(
                    "line {line}: key `{key}` has no value"
                )));
            }
            match key {
                "schema_version" => set(&mut schema_version, int(value, key, line)?, key, line)?,
                "system" => set(&mut system, value.parse()?, key, line)?,
                "method" => set(&mut method, value.parse()?, key, line)?,
                "target" => set(&mut target, value.parse()?, key, line)?,
                "seed" => set(&mut seed, int(value, key, line)?, key, line)?,
                "n" => set(&mut n, int(value, key, line)?, key, line)?,
                "steps" => set(&mut steps, int(value, key, line)?, key, line)?,
                "horizon" => set(&mut horizon, int(value, key, line)?, key, line)?,
                "max_iters" => set(&mut max_iters, int(value, key, line)?, key, line)?,
                "out" => set(&mut out, PathBuf::from(value), key, line)?,
                "artifacts" => set(&mut artifacts, PathBuf::from(value), key, line)?,
                other => {
                    return Err(BenchError::UnknownKey {
                        line,
                        key: other.to_string(),
                    })
                }
            }
        }

        match schema_version {
            None => {
                return Err(BenchError::Config(
                    "missing required key `schema_version`".into(),
                ))
            }
            Some(found) if found != SCHEMA_VERSION => {
                return Err(BenchError::Schema {
                    expected: SCHEMA_VERSION,
                    found,
                })
            }
            Some(_) => {}
        }
        let require = |name: &str| BenchError::Config(format!("missing required key `{name}`"));
        Ok(Self {
            system: system.ok_or_else(|| require("system"))?,
            method: method.ok_or_else(|| require("method"))?,
            target: target.ok_or_else(|| require("target"))?,
            seed: seed.unwrap_or(0),
            n,
            steps,
            horizon,
            max_iters,
            out,
            artifacts,
        })
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Validates the compatibility matrix and fills the system defaults.
    pub fn resolve(&self) -> Result<ResolvedConfig, BenchError> {
        if !self.system.supports(self.method) {
            return Err(BenchError::MethodSystem {
                method: self.method.to_string(),
                system: self.system.to_string(),
            });
        }
        // Surfaces "target not defined for this system" early.
        self.system.target_profile(self.target)?;

        let receding = self.method.is_receding(self.system);
        if self.horizon.is_some() && !receding {
            return Err(BenchError::Config(format!(
                "`horizon` does not apply to method `{}` on system `{}`",
                self.method, self.system
            )));
        }
        if self.max_iters.is_some() && self.method == MethodId::Pdeop {
            return Err(BenchError::Config(
                "`max_iters` does not apply to method `pdeop` (inference has no optimizer)".into(),
            ));
        }
        if self.horizon == Some(0) {
            return Err(BenchError::Config("`horizon` must be at least 1".into()));
        }
        let n = self.n.unwrap_or_else(|| self.system.default_n());
        let steps = self.steps.unwrap_or_else(|| self.system.default_steps());
        if n < 3 || steps == 0 {
            return Err(BenchError::Config(format!(
                "grid must have n ≥ 3 and steps ≥ 1, got n = {n}, steps = {steps}"
            )));
        }
        Ok(ResolvedConfig {
            system: self.system,
            method: self.method,
            target: self.target,
            seed: self.seed,
            n,
            steps,
            horizon: receding.then(|| self.horizon.unwrap_or(10)),
            max_iters: self.max_iters.unwrap_or(100),
            out: self.out.clone(),
            artifacts: self.artifacts.clone(),
        })
    }
}

impl ResolvedConfig {
    /// The canonical rendering the hash covers: every numeric knob in a
    /// fixed order, output locations excluded (they move results around
    /// without changing them).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "schema_version = {SCHEMA_VERSION}");
        let _ = writeln!(s, "system = {}", self.system);
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "target = {}", self.target);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "steps = {}", self.steps);
        if let Some(h) = self.horizon {
            let _ = writeln!(s, "horizon = {h}");
        }
        if self.method != MethodId::Pdeop {
            let _ = writeln!(s, "max_iters = {}", self.max_iters);
        }
        s
    }

    /// SHA-256 of the canonical rendering, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut s = String::with_capacity(64);
        for byte in digest {
            let _ = write!(s, "{byte:02x}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# comment
schema_version = 1
system = heat
method = lmpc
target = sine   # trailing comment
seed = 7
";

    #[test]
    fn parses_and_resolves_with_defaults() {
        let cfg = ExperimentConfig::parse(GOOD).unwrap();
        assert_eq!(cfg.seed, 7);
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.n, 41);
        assert_eq!(resolved.steps, 41);
        assert_eq!(resolved.horizon, Some(10));
        assert_eq!(resolved.max_iters, 100);
    }

    #[test]
    fn unknown_key_is_an_error_with_its_line() {
        let text = format!("{GOOD}tolarance = 1e-3\n");
        match ExperimentConfig::parse(&text) {
            Err(BenchError::UnknownKey { line, key }) => {
                assert_eq!(line, 7);
                assert_eq!(key, "tolarance");
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn schema_version_is_mandatory_and_checked() {
        let missing = "system = heat\nmethod = lmpc\ntarget = sine\n";
        assert!(matches!(
            ExperimentConfig::parse(missing),
            Err(BenchError::Config(_))
        ));
        let wrong = "schema_version = 2\nsystem = heat\nmethod = lmpc\ntarget = sine\n";
        assert!(matches!(
            ExperimentConfig::parse(wrong),
            Err(BenchError::Schema {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn hash_is_stable_and_ignores_output_paths() {
        let a = ExperimentConfig::parse(GOOD).unwrap().resolve().unwrap();
        let mut with_out = ExperimentConfig::parse(GOOD).unwrap();
        with_out.out = Some(PathBuf::from("elsewhere"));
        let b = with_out.resolve().unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);

        let mut reseeded = ExperimentConfig::parse(GOOD).unwrap();
        reseeded.seed = 8;
        assert_ne!(a.hash(), reseeded.resolve().unwrap().hash());
    }

    #[test]
    fn incompatible_method_fails_before_any_compute() {
        let cfg = ExperimentConfig::new(SystemId::Burgers, MethodId::Lmpc, TargetId::Sine);
        assert!(matches!(
            cfg.resolve(),
            Err(BenchError::MethodSystem { .. })
        ));
        let cfg = ExperimentConfig::new(SystemId::Voltage, MethodId::Adjoint, TargetId::Parabola);
        assert!(cfg.resolve().is_err());
    }
}
