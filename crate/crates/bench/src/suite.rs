//! Suite orchestration: a default benchmark matrix, parallel execution with
//! per-row fault isolation, and the table/plot artifacts a run leaves behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use oclab_neural::load_operator;
use oclab_stochastic::{load_dataset, Split};
use rayon::prelude::*;

use crate::artifacts::ArtifactPaths;
use crate::config::{ExperimentConfig, ResolvedConfig};
use crate::error::BenchError;
use crate::plot::{write_heatmap_triptych_svg, write_overlay_svg, Series};
use crate::record::{append_to_ledger, ResultRecord};
use crate::runner::{run_experiment, RunOutcome};
use crate::systems::{MethodId, SystemId, TargetId};
use crate::table::{render_table, write_table_csv, TableRow};

/// The stock benchmark matrix: per system, its two classical baselines and
/// the learned controller, all chasing the system's sine-family target.
pub fn default_suite() -> Vec<ExperimentConfig> {
    let mut configs = Vec::new();
    for system in SystemId::ALL {
        for method in system.classical_methods() {
            configs.push(ExperimentConfig::new(system, *method, TargetId::Sine));
        }
        configs.push(ExperimentConfig::new(system, MethodId::Pdeop, TargetId::Sine));
    }
    configs
}

/// Reads a suite manifest: one config path per line, `#` comments and blank
/// lines ignored, relative paths resolved against the manifest's directory.
pub fn parse_suite(path: &Path) -> Result<Vec<ExperimentConfig>, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut configs = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry = base.join(line);
        configs.push(
            ExperimentConfig::load(&entry)
                .map_err(|e| e.at_stage(&format!("suite entry {}", entry.display())))?,
        );
    }
    Ok(configs)
}

/// How a suite run writes its outputs.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Worker threads for the row runs.
    pub jobs: usize,
    /// Output directory: ledger, records, table, and plots go here.
    pub out: PathBuf,
    /// Where trained checkpoints live (needed by learned-controller rows).
    pub artifacts: ArtifactPaths,
}

/// One row's fate. Failures carry a message instead of aborting the suite.
#[derive(Debug)]
pub struct RowReport {
    pub system: SystemId,
    pub method: MethodId,
    pub target: TargetId,
    pub config_hash: String,
    pub outcome: Result<ResultRecord, String>,
}

/// Everything a suite run produced.
#[derive(Debug)]
pub struct SuiteReport {
    pub rows: Vec<RowReport>,
    /// The rendered comparison table (successful rows only).
    pub table_text: String,
    pub failures: usize,
}

/// Runs every config, isolating failures per row, then writes the ledger,
/// JSON records, comparison table, and terminal-profile overlays.
pub fn run_suite(
    configs: &[ExperimentConfig],
    opts: &SuiteOptions,
) -> Result<SuiteReport, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("cannot build a worker pool: {e}")))?;

    let results: Vec<RawRow> = pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let (resolved, outcome) = match config.resolve() {
                    Ok(resolved) => {
                        let outcome = run_experiment(&resolved, &opts.artifacts)
                            .map_err(|e| e.to_string());
                        (Some(resolved), outcome)
                    }
                    Err(e) => (None, Err(e.to_string())),
                };
                RawRow {
                    system: config.system,
                    method: config.method,
                    target: config.target,
                    resolved,
                    outcome,
                }
            })
            .collect()
    });

    // Ledger and record files are written in input order after the parallel
    // section so reruns produce byte-identical layouts (wall times aside).
    let ledger = opts.out.join("ledger.csv");
    let records_dir = opts.out.join("records");
    let mut rows = Vec::with_capacity(results.len());
    let mut table_rows = Vec::new();
    for row in &results {
        let config_hash = row
            .resolved
            .as_ref()
            .map(|r| r.hash())
            .unwrap_or_else(|| "-".into());
        let outcome = match &row.outcome {
            Ok(run) => {
                append_to_ledger(&ledger, &run.record)?;
                run.record
                    .write_json(&records_dir.join(format!("{config_hash}.json")))?;
                table_rows.push(TableRow::from_record(&run.record));
                Ok(run.record.clone())
            }
            Err(message) => Err(message.clone()),
        };
        rows.push(RowReport {
            system: row.system,
            method: row.method,
            target: row.target,
            config_hash,
            outcome,
        });
    }

    let table_text = render_table(&table_rows);
    write_table_csv(&opts.out.join("table.csv"), &table_rows)?;
    write_overlays(&results, &opts.out.join("plots"))?;

    let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
    Ok(SuiteReport {
        rows,
        table_text,
        failures,
    })
}

/// One row as it comes back from the worker pool.
struct RawRow {
    system: SystemId,
    method: MethodId,
    target: TargetId,
    resolved: Option<ResolvedConfig>,
    outcome: Result<RunOutcome, String>,
}

fn write_overlays(results: &[RawRow], plots_dir: &Path) -> Result<(), BenchError> {
    let mut groups: BTreeMap<(String, String), Vec<(&ResolvedConfig, &RunOutcome)>> =
        BTreeMap::new();
    for row in results {
        if let (Some(resolved), Ok(run)) = (&row.resolved, &row.outcome) {
            groups
                .entry((resolved.system.to_string(), resolved.target.to_string()))
                .or_default()
                .push((resolved, run));
        }
    }
    for ((system, target), members) in groups {
        let (first_cfg, first_run) = members[0];
        let xs = &first_run.xs;
        let mut series = vec![Series::dashed(
            "target",
            first_run.target.iter().copied().collect(),
        )];
        for (resolved, run) in &members {
            if run.xs.len() != xs.len() {
                // rows at a different resolution cannot share the abscissa
                continue;
            }
            series.push(Series::solid(
                resolved.method.to_string(),
                run.terminal.iter().copied().collect(),
            ));
        }
        write_overlay_svg(
            &plots_dir.join(format!("{system}_{target}.svg")),
            &format!(
                "{system} / {target}: terminal state, n={}",
                first_cfg.n
            ),
            xs,
            &series,
        )?;
    }
    Ok(())
}

/// Renders one operator fidelity triptych per system whose checkpoint and
/// dataset both exist: the stored rollout, the operator's rollout from the
/// same controls, and their absolute error. Returns the files written.
pub fn operator_triptychs(
    artifacts: &ArtifactPaths,
    plots_dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    let mut written = Vec::new();
    for system in SystemId::ALL {
        let ckpt = artifacts.operator(system);
        let dataset_dir = artifacts.dataset_dir(system);
        if !ckpt.exists() || !dataset_dir.join("meta.json").exists() {
            continue;
        }
        let stage = format!("plot {system}");
        let run = || -> Result<PathBuf, BenchError> {
            let (net, _) = load_operator(&ckpt)?;
            let dataset = load_dataset(&dataset_dir)?;
            let record = dataset
                .records
                .iter()
                .find(|r| r.split == Split::Test)
                .or_else(|| dataset.records.last())
                .ok_or_else(|| BenchError::Config(format!("dataset for {system} is empty")))?;
            let exact = record.trajectory.clone();
            let feats = net.trunk_features_plain(&dataset.grid.xs());
            let y0 = exact.row(0).transpose();
            let predicted =
                net.rollout_plain(&feats, &y0, &record.control, dataset.grid.steps());
            let path = plots_dir.join(format!("operator_{system}.svg"));
            write_heatmap_triptych_svg(
                &path,
                &format!("{system} operator rollout on a held-out control"),
                &exact,
                &predicted,
            )?;
            Ok(path)
        };
        written.push(run().map_err(|e| e.at_stage(&stage))?);
    }
    Ok(written)
}
