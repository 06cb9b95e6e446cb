//! Goal-conditioned PPO shared by both chefs.

mod descriptor;
mod ppo;
mod rollout;
mod train;

pub use descriptor::{goal_descriptor, goal_descriptor_into, GOAL_DESCRIPTOR_LEN, OVEN_FEATURES, OVEN_SLOTS};
pub use ppo::{compute_gae, normalize_advantages, ppo_update, surrogate_loss, value_loss, UpdateStats};
pub use rollout::{collect_rollouts, policy_input, run_episode, Batch, Episode, GoalSampler, Objective, Sample};
pub use train::{goal_success_rate, train, train_gcrl, write_metrics_csv, IterationMetrics};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

use crate::approx::{categorical_sample, log_softmax, Adam, Checkpoint, DenseNet, NetError, Tape};
use crate::gridworld::{observation_len, Action, GridError, GridState, JointAction, Kitchen, DEFAULT_WINDOW_RADIUS};

#[derive(Debug, Error)]
pub enum GcrlError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("expert demonstration is empty")]
    EmptyDemonstration,
    #[error("length mismatch: {0} rewards vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("checkpoint does not match: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub minibatch: usize,
    /// Step cap of one goal-reaching episode.
    pub horizon: u32,
    /// Joint environment steps collected per PPO iteration.
    pub steps_per_iter: u64,
    /// Total joint environment steps.
    pub budget: u64,
    pub goal_bonus: f64,
    pub step_penalty: f64,
    pub walk_min: u32,
    pub walk_max: u32,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub max_grad_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            epochs: 4,
            minibatch: 256,
            horizon: 128,
            steps_per_iter: 2048,
            budget: 200_000,
            goal_bonus: 1.0,
            step_penalty: 0.005,
            walk_min: 1,
            walk_max: 8,
            learning_rate: crate::approx::DEFAULT_LEARNING_RATE,
            hidden: vec![64, 64],
            max_grad_norm: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GcrlError> {
        let bad = |m: &str| Err(GcrlError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("gamma and lambda must lie in (0, 1]");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.horizon == 0 || self.steps_per_iter == 0 {
            return bad("epochs, minibatch, horizon and steps_per_iter must be positive");
        }
        if self.walk_min == 0 || self.walk_min > self.walk_max {
            return bad("walk range must satisfy 1 <= walk_min <= walk_max");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) || self.entropy_coef < 0.0 {
            return bad("learning rate and gradient clip must be positive, entropy coefficient non-negative");
        }
        Ok(())
    }

    pub fn sampler(&self) -> GoalSampler {
        GoalSampler {
            min_len: self.walk_min,
            max_len: self.walk_max,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).unwrap_or_default()))
    }
}

/// Policy and value networks over `observation ++ goal descriptor`, shared by both chefs.
#[derive(Debug, Clone, PartialEq)]
pub struct GcrlAgent {
    pub policy: DenseNet,
    pub value: DenseNet,
    pub policy_opt: Adam,
    pub value_opt: Adam,
    pub window_radius: usize,
}

pub const CHECKPOINT_KIND: &str = "gcrl-agent";

impl GcrlAgent {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], learning_rate: f64, window_radius: usize, rng: &mut R) -> Result<Self, GcrlError> {
        let input = observation_len(window_radius) + GOAL_DESCRIPTOR_LEN;
        let sizes = |out: usize| [&[input][..], hidden, &[out]].concat();
        let policy = DenseNet::init(&sizes(Action::COUNT), 0.01, rng)?;
        let value = DenseNet::init(&sizes(1), 1.0, rng)?;
        Ok(Self {
            policy_opt: Adam::new(policy.num_params(), learning_rate),
            value_opt: Adam::new(value.num_params(), learning_rate),
            policy,
            value,
            window_radius,
        })
    }

    pub fn for_kitchen<R: Rng + ?Sized>(kitchen: &Kitchen, cfg: &TrainConfig, rng: &mut R) -> Result<Self, GcrlError> {
        Self::new(&cfg.hidden, cfg.learning_rate, kitchen.window_radius, rng)
    }

    pub fn input_len(&self) -> usize {
        self.policy.input_len()
    }

    /// Checks that this agent can act in `kitchen`.
    pub fn check_kitchen(&self, kitchen: &Kitchen) -> Result<(), GcrlError> {
        if kitchen.window_radius != self.window_radius {
            return Err(GcrlError::Incompatible(format!(
                "agent window radius {} vs kitchen {}",
                self.window_radius, kitchen.window_radius
            )));
        }
        Ok(())
    }

    /// Samples one chef's action. Returns the action, its log-probability and the value estimate.
    pub fn sample_chef<R: Rng + ?Sized>(&self, input: &[f64], rng: &mut R, tape: &mut Tape) -> Result<(Action, f64, f64), GcrlError> {
        self.policy.forward_tape(input, tape)?;
        let logp = log_softmax(tape.output());
        let a = categorical_sample(tape.output(), rng);
        self.value.forward_tape(input, tape)?;
        Ok((Action::from_index(a), logp[a], tape.output()[0]))
    }

    /// Joint action for both chefs acting on `goal` (`None` for the plain task).
    pub fn act<R: Rng + ?Sized>(&self, kitchen: &Kitchen, state: &GridState, goal: Option<&GridState>, rng: &mut R) -> Result<JointAction, GcrlError> {
        let mut tape = Tape::default();
        let mut buf = Vec::new();
        let mut out = [Action::Stay; 2];
        for (chef, slot) in out.iter_mut().enumerate() {
            policy_input(kitchen, state, goal, chef, &mut buf);
            self.policy.forward_tape(&buf, &mut tape)?;
            *slot = Action::from_index(categorical_sample(tape.output(), rng));
        }
        Ok(JointAction(out))
    }

    pub fn to_checkpoint(&self, layout_hash: &str, config_digest: &str) -> Checkpoint {
        let mut ck = Checkpoint::new(CHECKPOINT_KIND)
            .tag("layout_hash", layout_hash)
            .tag("config_digest", config_digest)
            .tag("window_radius", self.window_radius.to_string());
        ck.nets.insert("policy".into(), self.policy.clone());
        ck.nets.insert("value".into(), self.value.clone());
        ck.optimizers.insert("policy".into(), self.policy_opt.clone());
        ck.optimizers.insert("value".into(), self.value_opt.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, GcrlError> {
        ck.expect_kind(CHECKPOINT_KIND)?;
        let window_radius = ck
            .tags
            .get("window_radius")
            .and_then(|r| r.parse().ok())
            .unwrap_or(DEFAULT_WINDOW_RADIUS);
        let agent = Self {
            policy: ck.net("policy")?.clone(),
            value: ck.net("value")?.clone(),
            policy_opt: ck.optimizer("policy")?.clone(),
            value_opt: ck.optimizer("value")?.clone(),
            window_radius,
        };
        let input = observation_len(window_radius) + GOAL_DESCRIPTOR_LEN;
        if agent.policy.input_len() != input
            || agent.value.input_len() != input
            || agent.policy.output_len() != Action::COUNT
            || agent.value.output_len() != 1
            || agent.policy_opt.len() != agent.policy.num_params()
            || agent.value_opt.len() != agent.value.num_params()
        {
            return Err(GcrlError::Incompatible("network shapes".into()));
        }
        Ok(agent)
    }

    pub fn save(&self, path: &Path, layout_hash: &str, config_digest: &str) -> Result<(), GcrlError> {
        Ok(self.to_checkpoint(layout_hash, config_digest).save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, GcrlError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
