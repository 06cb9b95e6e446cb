//! Temporal contrastive state embedding.
//!
//! A dense network maps state features to a small latent space where the L2
//! distance between two states tracks how many steps apart they occur in
//! rollouts. Training pairs each anchor with a state at most `window` steps
//! away in the same episode and contrasts it against other anchors of the batch.

mod dataset;
mod loss;
mod train;

pub use dataset::{build_dataset, BalancedSampler, ContrastiveBatch, Dataset, Record};
pub use loss::{infonce_loss, infonce_terms, l2_distance};
pub use train::{balanced_sample, train_embedding, write_latents_csv};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

use crate::approx::{Adam, Checkpoint, DenseNet, NetError};
use crate::gcrl::GcrlError;
use crate::gridworld::{state_features, GridError, GridState, Layout};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),
    #[error("contrastive loss is not finite")]
    NonFiniteLoss,
    #[error("feature length {found} does not match the model input {expected}")]
    InputMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Gcrl(#[from] GcrlError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Largest step separation that still counts as a positive pair.
    pub window: u32,
    pub batch_size: usize,
    /// Negatives per anchor, drawn from the other anchors of the batch.
    pub negatives: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Iterations averaged when picking the best snapshot.
    pub average_window: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            window: 12,
            batch_size: 32,
            negatives: 31,
            iterations: 3000,
            learning_rate: 1e-3,
            hidden: vec![64, 64],
            latent_dim: 8,
            average_window: 50,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 || self.batch_size == 0 || self.average_window == 0 {
            return bad("negatives, batch_size and average_window must be positive");
        }
        if self.latent_dim < 2 {
            return bad("latent dimension must be at least 2");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).unwrap_or_default()))
    }
}

pub const CHECKPOINT_KIND: &str = "temporal-embedding";

/// The learned map from state features to latents, with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub net: DenseNet,
    pub opt: Adam,
}

impl EmbeddingModel {
    pub fn new<R: Rng + ?Sized>(input_len: usize, cfg: &EmbeddingConfig, rng: &mut R) -> Result<Self, EmbeddingError> {
        cfg.validate()?;
        let sizes = [&[input_len][..], &cfg.hidden, &[cfg.latent_dim]].concat();
        let net = DenseNet::init(&sizes, 1.0, rng)?;
        Ok(Self {
            opt: Adam::new(net.num_params(), cfg.learning_rate),
            net,
        })
    }

    pub fn input_len(&self) -> usize {
        self.net.input_len()
    }

    pub fn latent_dim(&self) -> usize {
        self.net.output_len()
    }

    pub fn embed(&self, features: &[f64]) -> Result<Vec<f64>, EmbeddingError> {
        if features.len() != self.input_len() {
            return Err(EmbeddingError::InputMismatch {
                expected: self.input_len(),
                found: features.len(),
            });
        }
        Ok(self.net.forward(features)?)
    }

    pub fn embed_state(&self, layout: &Layout, state: &GridState) -> Result<Vec<f64>, EmbeddingError> {
        self.embed(&state_features(layout, state))
    }

    /// Latent distance between two states.
    pub fn distance(&self, layout: &Layout, a: &GridState, b: &GridState) -> Result<f64, EmbeddingError> {
        Ok(l2_distance(&self.embed_state(layout, a)?, &self.embed_state(layout, b)?))
    }

    /// Checkpoint tagged with the config and dataset digests.
    pub fn to_checkpoint(&self, config_digest: &str, dataset_digest: &str) -> Checkpoint {
        let mut ck = Checkpoint::new(CHECKPOINT_KIND)
            .tag("config_digest", config_digest)
            .tag("dataset_digest", dataset_digest);
        ck.nets.insert("embedding".into(), self.net.clone());
        ck.optimizers.insert("embedding".into(), self.opt.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, EmbeddingError> {
        ck.expect_kind(CHECKPOINT_KIND)?;
        let model = Self {
            net: ck.net("embedding")?.clone(),
            opt: ck.optimizer("embedding")?.clone(),
        };
        if model.latent_dim() < 2 || model.opt.len() != model.net.num_params() {
            return Err(NetError::Checkpoint("embedding network shape".into()).into());
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path, config_digest: &str, dataset_digest: &str) -> Result<(), EmbeddingError> {
        Ok(self.to_checkpoint(config_digest, dataset_digest).save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
