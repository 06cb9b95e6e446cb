//! Latent clustering, the cluster planning graph and sub-goal lookup.

mod cluster;
mod planning;

pub use cluster::{cluster_purity, fit_clusters, ClusterModel, KMEANS_TOLERANCE, MAX_KMEANS_ITERS};
pub use planning::{build_planning_graph, Edge, PlanningGraph, Subgoal};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::embed::EmbeddingError;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cluster count must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("need {k} distinct latents, found {distinct}")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("latent length {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expert demonstration is empty")]
    EmptyDemonstration,
    #[error("cluster id {0} out of range")]
    InvalidCluster(usize),
    #[error("no expert route from cluster {from} to cluster {to}")]
    Unreachable { from: usize, to: usize },
    #[error("no cluster near {0} has a route to the target")]
    NoPath(usize),
    #[error("malformed graph file: {0}")]
    Format(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Cluster model and planning graph, stored together as pretty-printed JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abstraction {
    pub clusters: ClusterModel,
    pub graph: PlanningGraph,
}

impl Abstraction {
    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let a: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        a.graph.check()?;
        if a.clusters.k() != a.graph.k {
            return Err(GraphError::Format("cluster count differs from graph".into()));
        }
        Ok(a)
    }
}
