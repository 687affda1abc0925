//! Versioned parameter checkpoints.
//!
//! A checkpoint is a single JSON object:
//!
//! ```json
//! {
//!   "format": "amm-lab-checkpoint",
//!   "version": 1,
//!   "kind": "<network kind, e.g. predictor or qnet>",
//!   "blocks": [ {"name": "...", "shape": [r, c], "data": [row-major f64]} ],
//!   "meta": { "...": "training progress, optimizer state, seeds" }
//! }
//! ```
//!
//! Block order matches the network's flat parameter layout. The layout is
//! stable across releases; `version` is bumped on any breaking change.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "amm-lab-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CheckpointError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Format(String),
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "checkpoint io error: {e}"),
            CheckpointError::Json(e) => write!(f, "checkpoint parse error: {e}"),
            CheckpointError::Format(msg) => write!(f, "checkpoint format error: {msg}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<std::io::Error> for CheckpointError {
    fn from(e: std::io::Error) -> Self {
        CheckpointError::Io(e)
    }
}

impl From<serde_json::Error> for CheckpointError {
    fn from(e: serde_json::Error) -> Self {
        CheckpointError::Json(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBlock {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values; length is the product of `shape`.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub blocks: Vec<TensorBlock>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl Checkpoint {
    pub fn new(kind: &str) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: kind.to_string(),
            blocks: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn push_block(&mut self, name: &str, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.blocks.push(TensorBlock {
            name: name.to_string(),
            shape,
            data,
        });
    }

    pub fn block(&self, name: &str) -> Result<&TensorBlock, CheckpointError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| CheckpointError::Format(format!("missing block `{name}`")))
    }

    pub fn set_meta_u64(&mut self, key: &str, value: u64) {
        self.meta.insert(key.to_string(), serde_json::json!(value));
    }

    pub fn meta_u64(&self, key: &str) -> Result<u64, CheckpointError> {
        self.meta
            .get(key)
            .and_then(|v| v.as_u64())
            .ok_or_else(|| CheckpointError::Format(format!("missing meta `{key}`")))
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ckpt: Checkpoint = serde_json::from_reader(file)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::Format(format!(
                "unknown format `{}`",
                ckpt.format
            )));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Format(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        for block in &ckpt.blocks {
            if block.shape.iter().product::<usize>() != block.data.len() {
                return Err(CheckpointError::Format(format!(
                    "block `{}` shape {:?} does not match {} values",
                    block.name,
                    block.shape,
                    block.data.len()
                )));
            }
        }
        Ok(ckpt)
    }

    /// Expect a specific network kind.
    pub fn expect_kind(&self, kind: &str) -> Result<(), CheckpointError> {
        if self.kind != kind {
            return Err(CheckpointError::Format(format!(
                "checkpoint holds `{}`, expected `{kind}`",
                self.kind
            )));
        }
        Ok(())
    }
}
