//! Checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "RGMTCKPT"
//! version  u32
//! hlen     u64      length of the JSON header
//! header   hlen bytes
//! weights  f64 LE, blocks in header order, each row-major
//! ```
//!
//! The header names every block with its shape, so a reader needs nothing
//! but the file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimizers::MinimizerKind;
use crate::neural::network::{param_count, Block, Dims, HeadKind, NetworkParams};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"RGMTCKPT";

/// Provenance stored alongside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub algorithm: MinimizerKind,
    pub game: String,
    /// Training horizon `T`; also fixes the Hedge temperature.
    pub horizon: usize,
    pub seed: u64,
    pub config_digest: String,
    pub delta_max: f64,
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    shape: [usize; 2],
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    dims: Dims,
    head_kind: HeadKind,
    alpha: f64,
    meta: CheckpointMeta,
    blocks: Vec<BlockEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.params.dims();
        let header = Header {
            format_version: FORMAT_VERSION,
            dims,
            head_kind: self.params.head_kind(),
            alpha: self.params.alpha(),
            meta: self.meta.clone(),
            blocks: Block::ALL
                .iter()
                .map(|b| {
                    let (r, c) = b.shape(dims);
                    BlockEntry {
                        name: b.name().to_string(),
                        shape: [r, c],
                    }
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + 8 * self.params.as_slice().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for w in self.params.as_slice() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Checkpoint {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(fail("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(fail(format!(
                "format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes
            .get(20..20 + hlen)
            .ok_or_else(|| fail("truncated header".into()))?;
        let header: Header =
            serde_json::from_slice(body).map_err(|e| fail(format!("bad header: {e}")))?;
        if header.format_version != version {
            return Err(fail("header version disagrees with preamble".into()));
        }
        let dims = header.dims;
        for (entry, block) in header.blocks.iter().zip(Block::ALL) {
            let (r, c) = block.shape(dims);
            if entry.name != block.name() || entry.shape != [r, c] {
                return Err(fail(format!(
                    "block '{}' {:?} does not match {} {:?}",
                    entry.name,
                    entry.shape,
                    block.name(),
                    [r, c]
                )));
            }
        }
        if header.blocks.len() != Block::ALL.len() {
            return Err(fail(format!(
                "expected {} blocks, found {}",
                Block::ALL.len(),
                header.blocks.len()
            )));
        }
        let weights = &bytes[20 + hlen..];
        let n = param_count(dims);
        if weights.len() != 8 * n {
            return Err(fail(format!(
                "expected {n} weights, found {} bytes",
                weights.len()
            )));
        }
        let data = weights
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let params = NetworkParams::from_parts(dims, header.head_kind, header.alpha, data)
            .map_err(|e| fail(e.to_string()))?;
        Ok(Checkpoint {
            params,
            meta: header.meta,
        })
    }

    /// Structured rejection when the network was trained for a different
    /// action count.
    pub fn check_actions(&self, actions: usize, path: &Path) -> Result<()> {
        let have = self.params.dims().actions;
        if have == actions {
            Ok(())
        } else {
            Err(Error::Checkpoint {
                path: path.to_path_buf(),
                reason: format!("trained for {have} actions, environment has {actions}"),
            })
        }
    }
}

pub fn save_checkpoint(path: &Path, params: &NetworkParams, meta: &CheckpointMeta) -> Result<()> {
    let ckpt = Checkpoint {
        params: params.clone(),
        meta: meta.clone(),
    };
    fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    Checkpoint::from_bytes(&bytes, path)
}
