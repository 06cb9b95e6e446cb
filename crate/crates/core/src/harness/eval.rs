use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Controller, HarnessError};
use crate::graph::GraphError;
use crate::gridworld::Kitchen;

/// Generator streams for resets and for action sampling are kept apart so
/// every controller sees the same start states for a given seed.
const ACTION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    pub episode_soups: Vec<u32>,
    pub mean_soups: f64,
    pub max_soups: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seeds: Vec<SeedEval>,
    pub mean_soups: f64,
    pub max_soups: u32,
}

/// Runs `episodes` full episodes per seed and aggregates soups delivered.
/// An episode whose sub-goal lookup finds no route scores what it had so far.
pub fn evaluate<C: Controller + ?Sized>(controller: &mut C, kitchen: &Kitchen, episodes: usize, seeds: &[u64]) -> Result<EvalReport, HarnessError> {
    if episodes == 0 || seeds.is_empty() {
        return Err(HarnessError::Config("evaluation needs at least one episode and one seed".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut resets = ChaCha8Rng::seed_from_u64(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ACTION_STREAM);
        let mut soups = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            controller.begin();
            let mut state = kitchen.reset_with(&mut resets);
            let mut delivered = 0;
            while state.tick < kitchen.episode_limit {
                let a = match controller.act(kitchen, &state, &mut rng) {
                    Ok(a) => a,
                    Err(HarnessError::Graph(GraphError::NoPath(_))) => break,
                    Err(e) => return Err(e),
                };
                let step = kitchen.step(&state, a)?;
                delivered += step.reward;
                state = step.state;
            }
            soups.push(delivered);
        }
        per_seed.push(SeedEval {
            seed,
            mean_soups: soups.iter().map(|&s| s as f64).sum::<f64>() / episodes as f64,
            max_soups: soups.iter().copied().max().unwrap_or(0),
            episode_soups: soups,
        });
    }
    let mean_soups = per_seed.iter().map(|s| s.mean_soups).sum::<f64>() / per_seed.len() as f64;
    let max_soups = per_seed.iter().map(|s| s.max_soups).max().unwrap_or(0);
    Ok(EvalReport {
        seeds: per_seed,
        mean_soups,
        max_soups,
    })
}

/// First step whose metric reaches 90% of the curve's maximum; `None` when
/// the maximum is not positive (never converged).
pub fn steps_to_convergence(curve: &[(u64, f64)]) -> Option<u64> {
    let max = curve.iter().map(|&(_, m)| m).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return None;
    }
    curve.iter().find(|&&(_, m)| m >= 0.9 * max).map(|&(s, _)| s)
}
