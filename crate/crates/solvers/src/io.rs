use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use oclab_core::StateTrajectory;

use crate::error::SolverError;

/// Magic bytes opening the binary tensor format.
const TENSOR_MAGIC: &[u8; 8] = b"OCLTENS\0";

/// Writes a trajectory as CSV with columns `t,x,y`, one row per space–time
/// node, ordered by time step then spatial index.
pub fn write_trajectory_csv(path: &Path, traj: &StateTrajectory) -> Result<(), SolverError> {
    let grid = traj.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,x,y")?;
    for k in 0..=grid.steps() {
        let t = grid.time(k);
        for (i, &x) in grid.xs().iter().enumerate() {
            writeln!(w, "{t},{x},{}", traj.values()[(k, i)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a dense row-major tensor: magic, u32 rank, u64 dims, then the
/// values as little-endian 64-bit floats.
pub fn write_tensor(path: &Path, dims: &[usize], data: &[f64]) -> Result<(), SolverError> {
    let expected: usize = dims.iter().product();
    if expected != data.len() {
        return Err(SolverError::Format(format!(
            "tensor dims {:?} imply {expected} values, got {}",
            dims,
            data.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tensor written by [`write_tensor`], returning `(dims, values)`.
pub fn read_tensor(path: &Path) -> Result<(Vec<usize>, Vec<f64>), SolverError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(SolverError::Format("bad tensor magic".into()));
    }
    let mut rank_bytes = [0u8; 4];
    r.read_exact(&mut rank_bytes)?;
    let rank = u32::from_le_bytes(rank_bytes) as usize;
    if rank > 8 {
        return Err(SolverError::Format(format!("implausible rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        dims.push(u64::from_le_bytes(b) as usize);
    }
    let count: usize = dims.iter().product();
    let mut data = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)?;
        data.push(f64::from_le_bytes(b));
    }
    // Trailing bytes mean the header lied about the shape.
    if r.read(&mut b)? != 0 {
        return Err(SolverError::Format("trailing bytes after tensor".into()));
    }
    Ok((dims, data))
}
