//! Result records, their JSON form, and the append-only CSV ledger.
//!
//! The ledger schema is fixed and documented: one header row, then one row
//! per run with the columns
//!
//! ```text
//! timestamp,config_hash,system,method,target,mse,obj_terminal,obj_running,
//! obj_effort,wall_s,forward_solves,backward_solves
//! ```
//!
//! `timestamp` is UNIX seconds. Appends never rewrite existing rows, so a
//! ledger accumulates the full history of a directory; records are keyed by
//! `config_hash`, which together with the seed reproduces every numeric
//! column except the wall time.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::systems::{MethodId, SystemId, TargetId};

/// The ledger header, in column order.
pub const LEDGER_COLUMNS: [&str; 12] = [
    "timestamp",
    "config_hash",
    "system",
    "method",
    "target",
    "mse",
    "obj_terminal",
    "obj_running",
    "obj_effort",
    "wall_s",
    "forward_solves",
    "backward_solves",
];

/// The outcome of one experiment, as persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    /// UNIX seconds at completion.
    pub timestamp: u64,
    /// SHA-256 of the canonical resolved configuration.
    pub config_hash: String,
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    /// Terminal mean-squared tracking error.
    pub mse: f64,
    pub obj_terminal: f64,
    pub obj_running: f64,
    pub obj_effort: f64,
    /// Wall time of the synthesis phase only (optimizer loop or closed-loop
    /// network rollout); data generation and training are reported by the
    /// pipeline, not here.
    pub wall_s: f64,
    pub forward_solves: usize,
    pub backward_solves: usize,
    /// Build/run provenance (crate version and seed).
    pub provenance: String,
}

impl ResultRecord {
    /// Provenance string recorded with every run.
    pub fn provenance_string(seed: u64) -> String {
        format!(
            "oclab-bench {} seed={seed}",
            env!("CARGO_PKG_VERSION")
        )
    }

    /// Current UNIX time in seconds.
    pub fn now() -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    /// Writes the record as pretty JSON.
    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// Appends one record to the CSV ledger, writing the header first if the
/// file does not exist yet. Callers that run rows in parallel must hold one
/// writer lock around this (see the suite runner).
pub fn append_to_ledger(path: &Path, record: &ResultRecord) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let fresh = !path.exists();
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        writer.write_record(LEDGER_COLUMNS)?;
    }
    writer.write_record([
        record.timestamp.to_string(),
        record.config_hash.clone(),
        record.system.to_string(),
        record.method.to_string(),
        record.target.to_string(),
        format!("{:e}", record.mse),
        format!("{:e}", record.obj_terminal),
        format!("{:e}", record.obj_running),
        format!("{:e}", record.obj_effort),
        format!("{:.6}", record.wall_s),
        record.forward_solves.to_string(),
        record.backward_solves.to_string(),
    ])?;
    writer.flush()?;
    Ok(())
}

/// One parsed ledger row.
#[derive(Debug, Clone)]
pub struct LedgerRow {
    pub timestamp: u64,
    pub config_hash: String,
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    pub mse: f64,
    pub obj_terminal: f64,
    pub obj_running: f64,
    pub obj_effort: f64,
    pub wall_s: f64,
    pub forward_solves: usize,
    pub backward_solves: usize,
}

/// Parses a ledger back under the fixed schema, validating the header.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>, BenchError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(LEDGER_COLUMNS) {
        return Err(BenchError::Config(format!(
            "ledger {} does not match the documented schema (header: {})",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let bad = |field: &str, value: &str| {
        BenchError::Config(format!("ledger field `{field}` has bad value `{value}`"))
    };
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        rows.push(LedgerRow {
            timestamp: get(0).parse().map_err(|_| bad("timestamp", get(0)))?,
            config_hash: get(1).to_string(),
            system: get(2).parse()?,
            method: get(3).parse()?,
            target: get(4).parse()?,
            mse: get(5).parse().map_err(|_| bad("mse", get(5)))?,
            obj_terminal: get(6).parse().map_err(|_| bad("obj_terminal", get(6)))?,
            obj_running: get(7).parse().map_err(|_| bad("obj_running", get(7)))?,
            obj_effort: get(8).parse().map_err(|_| bad("obj_effort", get(8)))?,
            wall_s: get(9).parse().map_err(|_| bad("wall_s", get(9)))?,
            forward_solves: get(10).parse().map_err(|_| bad("forward_solves", get(10)))?,
            backward_solves: get(11)
                .parse()
                .map_err(|_| bad("backward_solves", get(11)))?,
        });
    }
    Ok(rows)
}
