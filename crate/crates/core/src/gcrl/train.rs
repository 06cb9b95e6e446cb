use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::ppo::ppo_update;
use super::rollout::{collect_rollouts, run_episode, Objective};
use super::{GcrlAgent, GcrlError, TrainConfig};
use crate::gridworld::{GridState, Kitchen};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    /// Cumulative joint environment steps after this iteration.
    pub env_steps: u64,
    pub goal_success_rate: f64,
    pub mean_episode_len: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub clip_frac: f64,
    pub mean_soups: f64,
}

/// Alternates rollout collection and PPO updates until `cfg.budget` joint
/// steps are spent. `on_iter` sees the agent after every update.
pub fn train<R: Rng + ?Sized>(
    agent: &mut GcrlAgent,
    kitchen: &Kitchen,
    objective: Objective<'_>,
    cfg: &TrainConfig,
    rng: &mut R,
    on_iter: &mut dyn FnMut(&GcrlAgent, &IterationMetrics) -> Result<(), GcrlError>,
) -> Result<Vec<IterationMetrics>, GcrlError> {
    cfg.validate()?;
    agent.check_kitchen(kitchen)?;
    if let Objective::Goals { starts, .. } = objective {
        if starts.is_empty() {
            return Err(GcrlError::EmptyDemonstration);
        }
    }
    let mut used = 0;
    let mut metrics = Vec::new();
    while used < cfg.budget {
        let steps = cfg.steps_per_iter.min(cfg.budget - used);
        let mut batch = collect_rollouts(agent, kitchen, objective, cfg, steps, rng)?;
        used += batch.env_steps;
        let stats = ppo_update(agent, &mut batch.samples, cfg, rng)?;
        let n = batch.episodes.len().max(1) as f64;
        let m = IterationMetrics {
            env_steps: used,
            goal_success_rate: batch.episodes.iter().filter(|e| e.success).count() as f64 / n,
            mean_episode_len: batch.env_steps as f64 / n,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            kl: stats.kl,
            clip_frac: stats.clip_frac,
            mean_soups: batch.episodes.iter().map(|e| e.soups as f64).sum::<f64>() / n,
        };
        on_iter(agent, &m)?;
        metrics.push(m);
    }
    Ok(metrics)
}

/// Trains (or finetunes `init`) on random-walk goals from expert states.
pub fn train_gcrl(
    kitchen: &Kitchen,
    expert_states: &[GridState],
    cfg: &TrainConfig,
    seed: u64,
    init: Option<GcrlAgent>,
) -> Result<(GcrlAgent, Vec<IterationMetrics>), GcrlError> {
    cfg.validate()?;
    if expert_states.is_empty() {
        return Err(GcrlError::EmptyDemonstration);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = match init {
        Some(a) => a,
        None => GcrlAgent::for_kitchen(kitchen, cfg, &mut rng)?,
    };
    let objective = Objective::Goals {
        starts: expert_states,
        sampler: cfg.sampler(),
    };
    let metrics = train(&mut agent, kitchen, objective, cfg, &mut rng, &mut |_, _| Ok(()))?;
    Ok((agent, metrics))
}

/// Fraction of `episodes` random-walk goals the agent reaches within the horizon.
pub fn goal_success_rate(
    agent: &GcrlAgent,
    kitchen: &Kitchen,
    expert_states: &[GridState],
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> Result<f64, GcrlError> {
    if expert_states.is_empty() {
        return Err(GcrlError::EmptyDemonstration);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = cfg.sampler();
    let mut hits = 0;
    for _ in 0..episodes {
        let start = expert_states[rng.gen_range(0..expert_states.len())].clone();
        let goal = sampler.sample(kitchen, &start, &mut rng);
        let ep = run_episode(agent, kitchen, start, Some(goal), cfg.horizon as u64, cfg, &mut rng, None)?;
        hits += ep.success as usize;
    }
    Ok(hits as f64 / episodes.max(1) as f64)
}

pub fn write_metrics_csv<W: Write>(mut w: W, metrics: &[IterationMetrics]) -> std::io::Result<()> {
    writeln!(w, "env_steps,goal_success_rate,mean_episode_len,policy_loss,value_loss,kl,clip_frac")?;
    for m in metrics {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            m.env_steps, m.goal_success_rate, m.mean_episode_len, m.policy_loss, m.value_loss, m.kl, m.clip_frac
        )?;
    }
    Ok(())
}
