//! Small dense networks with hand-written backpropagation, an Adam optimizer
//! and categorical sampling.

mod adam;
mod checkpoint;
mod net;
mod sample;

pub use adam::{clip_grad_norm, Adam, DEFAULT_LEARNING_RATE};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use net::{dot, DenseNet, Tape};
pub use sample::{argmax, categorical_sample, log_softmax, softmax};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("layer sizes {0:?} must have at least two non-zero entries")]
    BadArchitecture(Vec<usize>),
    #[error("gradient entry {0} is not finite")]
    NonFiniteGradient(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
