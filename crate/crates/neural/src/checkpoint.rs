//! Versioned binary checkpoints for trained models.
//!
//! Layout: an 8-byte magic, a little-endian `u16` format version, a
//! length-prefixed JSON header (architecture descriptor plus free-form
//! training metadata), then the length-prefixed raw `f64` parameter blob in
//! registration order. Parameters round-trip bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::SurrogateController;
use crate::error::NeuralError;
use crate::nets::{DenseNet, RecurrentCell};
use crate::operator::OperatorNet;
use crate::tape::Activation;

const MAGIC: &[u8; 8] = b"OCLABNN\0";
const VERSION: u16 = 1;

/// Architecture of a checkpointed model, enough to rebuild it exactly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchDescriptor {
    Operator {
        state_dim: usize,
        input_dim: usize,
        branch_sizes: Vec<usize>,
        trunk_sizes: Vec<usize>,
        activation: Activation,
    },
    StaticController {
        sizes: Vec<usize>,
        activation: Activation,
        lo: f64,
        hi: f64,
    },
    RecurrentController {
        input_dim: usize,
        hidden: Vec<usize>,
        head_sizes: Vec<usize>,
        lo: f64,
        hi: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct Header {
    arch: ArchDescriptor,
    metadata: serde_json::Value,
}

/// Writes one checkpoint file.
pub fn save_checkpoint(
    path: &Path,
    arch: &ArchDescriptor,
    params: &[f64],
    metadata: &serde_json::Value,
) -> Result<(), NeuralError> {
    let header = serde_json::to_vec(&Header {
        arch: arch.clone(),
        metadata: metadata.clone(),
    })?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header.len() as u32).to_le_bytes())?;
    file.write_all(&header)?;
    file.write_all(&(params.len() as u64).to_le_bytes())?;
    for p in params {
        file.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one checkpoint file back.
pub fn load_checkpoint(
    path: &Path,
) -> Result<(ArchDescriptor, Vec<f64>, serde_json::Value), NeuralError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NeuralError::Checkpoint(format!(
            "{} is not a model checkpoint (bad magic)",
            path.display()
        )));
    }
    let mut version = [0u8; 2];
    file.read_exact(&mut version)?;
    let version = u16::from_le_bytes(version);
    if version != VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let mut len4 = [0u8; 4];
    file.read_exact(&mut len4)?;
    let mut header = vec![0u8; u32::from_le_bytes(len4) as usize];
    file.read_exact(&mut header)?;
    let header: Header = serde_json::from_slice(&header)?;
    let mut len8 = [0u8; 8];
    file.read_exact(&mut len8)?;
    let count = u64::from_le_bytes(len8) as usize;
    let mut params = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        file.read_exact(&mut buf)?;
        params.push(f64::from_le_bytes(buf));
    }
    Ok((header.arch, params, header.metadata))
}

/// Saves an operator (branch parameters first, then trunk).
pub fn save_operator(
    path: &Path,
    net: &OperatorNet,
    metadata: &serde_json::Value,
) -> Result<(), NeuralError> {
    let arch = ArchDescriptor::Operator {
        state_dim: net.state_dim(),
        input_dim: net.input_dim(),
        branch_sizes: net.branch().sizes().to_vec(),
        trunk_sizes: net.trunk().sizes().to_vec(),
        activation: net.branch().activation(),
    };
    let mut params = Vec::with_capacity(net.param_count());
    params.extend_from_slice(net.branch().params());
    params.extend_from_slice(net.trunk().params());
    save_checkpoint(path, &arch, &params, metadata)
}

/// Loads an operator checkpoint.
pub fn load_operator(path: &Path) -> Result<(OperatorNet, serde_json::Value), NeuralError> {
    let (arch, params, metadata) = load_checkpoint(path)?;
    match arch {
        ArchDescriptor::Operator {
            state_dim,
            input_dim,
            branch_sizes,
            trunk_sizes,
            activation,
        } => {
            let split: usize = branch_sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
            if split > params.len() {
                return Err(NeuralError::Checkpoint(
                    "parameter blob shorter than the branch layout".into(),
                ));
            }
            let branch = DenseNet::from_params(branch_sizes, activation, params[..split].to_vec())?;
            let trunk = DenseNet::from_params(trunk_sizes, activation, params[split..].to_vec())?;
            let net = OperatorNet::from_parts(branch, trunk, state_dim, input_dim)?;
            Ok((net, metadata))
        }
        _ => Err(NeuralError::Checkpoint(
            "checkpoint does not hold an operator".into(),
        )),
    }
}

/// Saves a controller (recurrent: cell parameters first, then head).
pub fn save_controller(
    path: &Path,
    controller: &SurrogateController,
    metadata: &serde_json::Value,
) -> Result<(), NeuralError> {
    let (lo, hi) = controller.bounds();
    let arch = match controller {
        SurrogateController::Static { net, .. } => ArchDescriptor::StaticController {
            sizes: net.sizes().to_vec(),
            activation: net.activation(),
            lo,
            hi,
        },
        SurrogateController::Recurrent { cell, head, .. } => ArchDescriptor::RecurrentController {
            input_dim: cell.input_dim(),
            hidden: cell.hidden_sizes().to_vec(),
            head_sizes: head.sizes().to_vec(),
            lo,
            hi,
        },
    };
    let mut params = Vec::with_capacity(controller.param_count());
    for block in controller.param_blocks() {
        params.extend_from_slice(block);
    }
    save_checkpoint(path, &arch, &params, metadata)
}

/// Loads a controller checkpoint.
pub fn load_controller(
    path: &Path,
) -> Result<(SurrogateController, serde_json::Value), NeuralError> {
    let (arch, params, metadata) = load_checkpoint(path)?;
    match arch {
        ArchDescriptor::StaticController {
            sizes,
            activation,
            lo,
            hi,
        } => {
            let net = DenseNet::from_params(sizes, activation, params)?;
            Ok((
                SurrogateController::from_parts_static(net, lo, hi)?,
                metadata,
            ))
        }
        ArchDescriptor::RecurrentController {
            input_dim,
            hidden,
            head_sizes,
            lo,
            hi,
        } => {
            let mut cell_count = 0usize;
            let mut input = input_dim;
            for &h in &hidden {
                cell_count += 3 * ((input + h) * h + h);
                input = h;
            }
            if cell_count > params.len() {
                return Err(NeuralError::Checkpoint(
                    "parameter blob shorter than the cell layout".into(),
                ));
            }
            let cell =
                RecurrentCell::from_params(input_dim, hidden, params[..cell_count].to_vec())?;
            let head = DenseNet::from_params(
                head_sizes,
                Activation::Identity,
                params[cell_count..].to_vec(),
            )?;
            Ok((
                SurrogateController::from_parts_recurrent(cell, head, lo, hi)?,
                metadata,
            ))
        }
        ArchDescriptor::Operator { .. } => Err(NeuralError::Checkpoint(
            "checkpoint holds an operator, not a controller".into(),
        )),
    }
}
