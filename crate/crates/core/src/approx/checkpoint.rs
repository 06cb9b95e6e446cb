use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{Adam, DenseNet, NetError};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Named networks and optimizer states plus free-form string tags, stored as JSON.
///
/// Floats are written with round-trip precision, so a loaded network
/// reproduces the saved one's outputs bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub tags: BTreeMap<String, String>,
    pub nets: BTreeMap<String, DenseNet>,
    pub optimizers: BTreeMap<String, Adam>,
}

impl Checkpoint {
    pub fn new(kind: &str) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            kind: kind.to_string(),
            tags: BTreeMap::new(),
            nets: BTreeMap::new(),
            optimizers: BTreeMap::new(),
        }
    }

    pub fn tag(mut self, key: &str, value: impl Into<String>) -> Self {
        self.tags.insert(key.to_string(), value.into());
        self
    }

    pub fn net(&self, name: &str) -> Result<&DenseNet, NetError> {
        self.nets
            .get(name)
            .ok_or_else(|| NetError::Checkpoint(format!("missing network {name:?}")))
    }

    pub fn optimizer(&self, name: &str) -> Result<&Adam, NetError> {
        self.optimizers
            .get(name)
            .ok_or_else(|| NetError::Checkpoint(format!("missing optimizer {name:?}")))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<(), NetError> {
        if self.kind != kind {
            return Err(NetError::Checkpoint(format!("expected a {kind:?} checkpoint, found {:?}", self.kind)));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let ck: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(NetError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        for (name, net) in &ck.nets {
            let expected = DenseNet::zeros(net.sizes())?.num_params();
            if net.num_params() != expected || !net.is_finite() {
                return Err(NetError::Checkpoint(format!("network {name:?} is malformed")));
            }
        }
        Ok(ck)
    }
}
