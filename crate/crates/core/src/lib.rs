//! Transfer in a two-chef cooking gridworld through goal-conditioned PPO,
//! temporal contrastive embeddings and a cluster planning graph.

pub mod approx;
pub mod assets;
pub mod embed;
pub mod expert;
pub mod gcrl;
pub mod graph;
pub mod gridworld;
pub mod harness;
