use rand::Rng;

use super::descriptor::{goal_descriptor_into, GOAL_DESCRIPTOR_LEN};
use super::ppo::compute_gae;
use super::{GcrlAgent, GcrlError, TrainConfig};
use crate::approx::Tape;
use crate::gridworld::{goal_reached, random_joint_action, Action, GridState, JointAction, Kitchen};

/// Random-walk goal generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoalSampler {
    pub min_len: u32,
    pub max_len: u32,
}

impl GoalSampler {
    pub fn new(min_len: u32, max_len: u32) -> Result<Self, GcrlError> {
        if min_len == 0 || min_len > max_len {
            return Err(GcrlError::InvalidConfig(format!("walk range [{min_len}, {max_len}] must satisfy 1 <= min <= max")));
        }
        Ok(Self { min_len, max_len })
    }

    /// State after `L ~ U[min_len, max_len]` uniformly random joint actions from `s0`.
    pub fn sample<R: Rng + ?Sized>(&self, kitchen: &Kitchen, s0: &GridState, rng: &mut R) -> GridState {
        let len = rng.gen_range(self.min_len..=self.max_len);
        let mut s = s0.clone();
        for _ in 0..len {
            s = kitchen.transition(&s, random_joint_action(rng)).0;
        }
        s
    }
}

/// What an episode is rewarded for.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Reach random-walk goals from states of an expert demonstration.
    Goals { starts: &'a [GridState], sampler: GoalSampler },
    /// Deliver soups from a regular reset, with no goal.
    Soups,
}

/// One PPO training sample: a single chef's decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub action: u8,
    pub logp: f64,
    pub value: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub goal: Option<GridState>,
    /// Visited states, starting with the initial one.
    pub states: Vec<GridState>,
    pub actions: Vec<JointAction>,
    pub success: bool,
    pub soups: u32,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn start(&self) -> &GridState {
        &self.states[0]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub samples: Vec<Sample>,
    pub episodes: Vec<Episode>,
    pub env_steps: u64,
}

/// Observation followed by the goal descriptor for one chef.
pub fn policy_input(kitchen: &Kitchen, state: &GridState, goal: Option<&GridState>, chef: usize, buf: &mut Vec<f64>) {
    kitchen.observe_into(state, chef, buf);
    let n = buf.len();
    buf.resize(n + GOAL_DESCRIPTOR_LEN, 0.0);
    goal_descriptor_into(&kitchen.layout, state, goal, chef, &mut buf[n..]);
}

/// Runs the agent from `start` for at most `max_steps` joint steps.
///
/// With a goal the reward is `goal_bonus` on reaching it minus `step_penalty`
/// per step and the episode ends on success; without one the reward is soups
/// delivered and the episode ends at the kitchen's episode limit. When
/// `samples` is given, per-chef samples with advantages are appended.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: Rng + ?Sized>(
    agent: &GcrlAgent,
    kitchen: &Kitchen,
    start: GridState,
    goal: Option<GridState>,
    max_steps: u64,
    cfg: &TrainConfig,
    rng: &mut R,
    samples: Option<&mut Vec<Sample>>,
) -> Result<Episode, GcrlError> {
    let record = samples.is_some();
    let mut tape = Tape::default();
    let mut streams: [Vec<Sample>; 2] = [Vec::new(), Vec::new()];
    let mut rewards = Vec::new();
    let mut states = vec![start];
    let mut actions = Vec::new();
    let (mut success, mut terminal, mut soups) = (false, false, 0);
    let mut buf = Vec::with_capacity(agent.input_len());

    while (actions.len() as u64) < max_steps {
        let s = states.last().expect("states is never empty");
        let mut joint = [Action::Stay; 2];
        for chef in 0..2 {
            policy_input(kitchen, s, goal.as_ref(), chef, &mut buf);
            let (a, logp, value) = agent.sample_chef(&buf, rng, &mut tape)?;
            joint[chef] = a;
            if record {
                streams[chef].push(Sample {
                    input: buf.clone(),
                    action: a.index() as u8,
                    logp,
                    value,
                    advantage: 0.0,
                    ret: 0.0,
                });
            }
        }
        let (next, delivered) = kitchen.transition(s, JointAction(joint));
        soups += delivered;
        let reward = match &goal {
            Some(g) => {
                success = goal_reached(&next, g);
                terminal = success;
                let bonus = if success { cfg.goal_bonus } else { 0.0 };
                bonus - cfg.step_penalty
            }
            None => {
                terminal = next.tick >= kitchen.episode_limit;
                delivered as f64
            }
        };
        rewards.push(reward);
        actions.push(JointAction(joint));
        states.push(next);
        if terminal {
            break;
        }
    }

    if let Some(out) = samples {
        let last = states.last().expect("states is never empty");
        for (chef, stream) in streams.iter_mut().enumerate() {
            let bootstrap = if terminal || stream.is_empty() {
                0.0
            } else {
                policy_input(kitchen, last, goal.as_ref(), chef, &mut buf);
                agent.value.forward_tape(&buf, &mut tape)?;
                tape.output()[0]
            };
            let values: Vec<f64> = stream.iter().map(|x| x.value).collect();
            let (adv, ret) = compute_gae(&rewards, &values, bootstrap, cfg.gamma, cfg.lambda)?;
            for ((x, a), r) in stream.iter_mut().zip(adv).zip(ret) {
                x.advantage = a;
                x.ret = r;
            }
            out.append(stream);
        }
    }
    Ok(Episode {
        goal,
        states,
        actions,
        success,
        soups,
    })
}

/// Collects whole episodes until exactly `steps` joint environment steps
/// have been taken (the last episode is cut short if needed).
pub fn collect_rollouts<R: Rng + ?Sized>(
    agent: &GcrlAgent,
    kitchen: &Kitchen,
    objective: Objective<'_>,
    cfg: &TrainConfig,
    steps: u64,
    rng: &mut R,
) -> Result<Batch, GcrlError> {
    let mut batch = Batch::default();
    while batch.env_steps < steps {
        let left = steps - batch.env_steps;
        let (start, goal, cap) = match objective {
            Objective::Goals { starts, sampler } => {
                if starts.is_empty() {
                    return Err(GcrlError::EmptyDemonstration);
                }
                let start = starts[rng.gen_range(0..starts.len())].clone();
                let goal = sampler.sample(kitchen, &start, rng);
                (start, Some(goal), cfg.horizon as u64)
            }
            Objective::Soups => {
                let start = kitchen.reset_with(rng);
                let cap = kitchen.episode_limit.saturating_sub(start.tick).max(1) as u64;
                (start, None, cap)
            }
        };
        let ep = run_episode(agent, kitchen, start, goal, cap.min(left), cfg, rng, Some(&mut batch.samples))?;
        batch.env_steps += ep.len() as u64;
        batch.episodes.push(ep);
    }
    Ok(batch)
}
