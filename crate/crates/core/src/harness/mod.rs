//! Sub-goal execution, evaluation, baselines and the end-to-end pipeline.

mod eval;
mod execute;
mod pipeline;
mod render;

pub use eval::{evaluate, steps_to_convergence, EvalReport, SeedEval};
pub use execute::{
    execute_task, BfsGoalReacher, Controller, ExecutionTrace, GoalPolicy, Idle, PlainPolicy, SubgoalChoice, SubgoalController,
    SubgoalMode,
};
pub use pipeline::{
    build_abstraction, embedding_dataset, expert_states, finetune, pretrain, resolve_layout, run_baseline, run_experiment, run_pipeline_seed, save_artifacts,
    stage_seed, write_metrics_csv, BaselineKind, CurvePoint, ExperimentConfig, ExperimentReport, PipelineArtifacts, RunReport,
    METRICS_HEADER,
};
pub use render::{render_state, render_subgoals, Frame};

use thiserror::Error;

use crate::embed::EmbeddingError;
use crate::expert::ExpertError;
use crate::gcrl::GcrlError;
use crate::graph::GraphError;
use crate::gridworld::GridError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Gcrl(#[from] GcrlError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 3 for a failed stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}
