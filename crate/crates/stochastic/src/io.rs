use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use oclab_core::{SpaceTimeGrid, StateTrajectory};
use oclab_solvers::{read_tensor, write_tensor};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split, SystemKind, TrajectoryRecord};
use crate::error::StochasticError;

/// Bump when the on-disk layout changes incompatibly.
const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GridMeta {
    length: f64,
    n: usize,
    final_time: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
struct DatasetMeta {
    schema_version: u32,
    system: SystemKind,
    grid: GridMeta,
    count: usize,
    clipped_fraction: f64,
    resampled: usize,
}

#[derive(Serialize, Deserialize)]
struct ManifestRow {
    id: usize,
    split: Split,
    seed: u64,
    system: SystemKind,
    shapes: Shapes,
}

#[derive(Serialize, Deserialize)]
struct Shapes {
    control: [usize; 2],
    trajectory: [usize; 2],
}

/// Writes a dataset as `meta.json`, `manifest.jsonl`, and two stacked
/// binary tensors (`states.bin`, `controls.bin`) in record-id order.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<(), StochasticError> {
    fs::create_dir_all(dir)?;
    let grid = &dataset.grid;
    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        system: dataset.system,
        grid: GridMeta {
            length: grid.length(),
            n: grid.n(),
            final_time: grid.final_time(),
            steps: grid.steps(),
        },
        count: dataset.records.len(),
        clipped_fraction: dataset.clipped_fraction,
        resampled: dataset.resampled,
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("meta.json"))?), &meta)?;

    let mut records: Vec<&TrajectoryRecord> = dataset.records.iter().collect();
    records.sort_by_key(|r| r.id);

    let mut manifest = BufWriter::new(File::create(dir.join("manifest.jsonl"))?);
    for rec in &records {
        let row = ManifestRow {
            id: rec.id,
            split: rec.split,
            seed: rec.seed,
            system: dataset.system,
            shapes: Shapes {
                control: [rec.control.nrows(), rec.control.ncols()],
                trajectory: [
                    rec.trajectory.values().nrows(),
                    rec.trajectory.values().ncols(),
                ],
            },
        };
        serde_json::to_writer(&mut manifest, &row)?;
        manifest.write_all(b"\n")?;
    }
    manifest.flush()?;

    let (c_rows, c_cols) = (records[0].control.nrows(), records[0].control.ncols());
    let mut controls = Vec::with_capacity(records.len() * c_rows * c_cols);
    let mut states = Vec::with_capacity(records.len() * (grid.steps() + 1) * grid.n());
    for rec in &records {
        if rec.control.nrows() != c_rows || rec.control.ncols() != c_cols {
            return Err(StochasticError::Format(format!(
                "record {} control shape {}×{} differs from {}×{}",
                rec.id,
                rec.control.nrows(),
                rec.control.ncols(),
                c_rows,
                c_cols
            )));
        }
        for i in 0..c_rows {
            for j in 0..c_cols {
                controls.push(rec.control[(i, j)]);
            }
        }
        let values = rec.trajectory.values();
        for k in 0..values.nrows() {
            for i in 0..values.ncols() {
                states.push(values[(k, i)]);
            }
        }
    }
    write_tensor(
        &dir.join("controls.bin"),
        &[records.len(), c_rows, c_cols],
        &controls,
    )?;
    write_tensor(
        &dir.join("states.bin"),
        &[records.len(), grid.steps() + 1, grid.n()],
        &states,
    )?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset, StochasticError> {
    let meta: DatasetMeta =
        serde_json::from_reader(BufReader::new(File::open(dir.join("meta.json"))?))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(StochasticError::Format(format!(
            "unsupported dataset schema version {}",
            meta.schema_version
        )));
    }
    let grid = SpaceTimeGrid::new(
        meta.grid.length,
        meta.grid.n,
        meta.grid.final_time,
        meta.grid.steps,
    )
    .map_err(oclab_solvers::SolverError::from)?;

    let mut rows = Vec::with_capacity(meta.count);
    for line in BufReader::new(File::open(dir.join("manifest.jsonl"))?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str::<ManifestRow>(&line)?);
    }
    if rows.len() != meta.count {
        return Err(StochasticError::Format(format!(
            "manifest has {} rows, meta.json says {}",
            rows.len(),
            meta.count
        )));
    }

    let (c_dims, c_data) = read_tensor(&dir.join("controls.bin"))?;
    let (s_dims, s_data) = read_tensor(&dir.join("states.bin"))?;
    if c_dims.len() != 3 || c_dims[0] != meta.count {
        return Err(StochasticError::Format(format!(
            "controls tensor dims {c_dims:?} do not match manifest count {}",
            meta.count
        )));
    }
    if s_dims != [meta.count, grid.steps() + 1, grid.n()] {
        return Err(StochasticError::Format(format!(
            "states tensor dims {s_dims:?} do not match the grid"
        )));
    }

    let c_stride = c_dims[1] * c_dims[2];
    let s_stride = s_dims[1] * s_dims[2];
    let mut records = Vec::with_capacity(meta.count);
    for (idx, row) in rows.into_iter().enumerate() {
        if row.shapes.control != [c_dims[1], c_dims[2]] {
            return Err(StochasticError::Format(format!(
                "record {} control shape {:?} does not match tensor {:?}",
                row.id,
                row.shapes.control,
                &c_dims[1..]
            )));
        }
        let control = DMatrix::from_row_slice(
            c_dims[1],
            c_dims[2],
            &c_data[idx * c_stride..(idx + 1) * c_stride],
        );
        let values = DMatrix::from_row_slice(
            s_dims[1],
            s_dims[2],
            &s_data[idx * s_stride..(idx + 1) * s_stride],
        );
        let trajectory =
            StateTrajectory::new(grid.clone(), values).map_err(oclab_solvers::SolverError::from)?;
        records.push(TrajectoryRecord {
            id: row.id,
            split: row.split,
            seed: row.seed,
            control,
            trajectory,
        });
    }
    Ok(Dataset {
        system: meta.system,
        grid,
        records,
        clipped_fraction: meta.clipped_fraction,
        resampled: meta.resampled,
    })
}
