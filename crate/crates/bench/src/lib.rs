//! Benchmark harness for the optimal-control laboratory: experiment
//! configuration, the training pipeline for the learned controllers, a
//! parallel suite runner, and table/plot reporting.
//!
//! The library backs the `oclab` binary but is usable directly; the pieces
//! compose in dependency order:
//!
//! - [`systems`]: the three benchmark plants, their grids, targets, and
//!   desk-scale learning settings.
//! - [`config`]: the `key = value` experiment format, validation, and the
//!   content hash that names each run.
//! - [`artifacts`]: dataset → operator → controller pipeline with
//!   idempotent, per-system stages.
//! - [`runner`]: executes one experiment and meters accuracy, wall time,
//!   and solve counts.
//! - [`suite`]: runs a batch in parallel with per-row fault isolation.
//! - [`record`], [`table`], [`plot`]: the append-only ledger, comparison
//!   tables, and SVG plots a run leaves behind.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod plot;
pub mod record;
pub mod runner;
pub mod suite;
pub mod systems;
pub mod table;

pub use artifacts::{generate_all, ArtifactPaths, StageOutcome};
pub use config::{ExperimentConfig, ResolvedConfig, SCHEMA_VERSION};
pub use error::BenchError;
pub use record::{append_to_ledger, read_ledger, LedgerRow, ResultRecord, LEDGER_COLUMNS};
pub use runner::{run_experiment, RunOutcome};
pub use suite::{
    default_suite, operator_triptychs, parse_suite, run_suite, SuiteOptions, SuiteReport,
};
pub use systems::{MethodId, SystemId, TargetId};
pub use table::{render_table, write_table_csv, TableRow};
