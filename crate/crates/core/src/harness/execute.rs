use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::HarnessError;
use crate::embed::EmbeddingModel;
use crate::expert::ExpertController;
use crate::gcrl::GcrlAgent;
use crate::graph::{Abstraction, GraphError, Subgoal};
use crate::gridworld::{goal_reached, GridState, JointAction, Kitchen, StateKey};

/// Anything that picks joint actions for a whole episode.
pub trait Controller {
    /// Called before the first action of every episode.
    fn begin(&mut self) {}
    fn act(&mut self, kitchen: &Kitchen, state: &GridState, rng: &mut ChaCha8Rng) -> Result<JointAction, HarnessError>;
}

/// A policy that acts towards an optional goal state.
pub trait GoalPolicy {
    fn act_towards(&mut self, kitchen: &Kitchen, state: &GridState, goal: Option<&GridState>, rng: &mut ChaCha8Rng) -> Result<JointAction, HarnessError>;
}

impl GoalPolicy for &GcrlAgent {
    fn act_towards(&mut self, kitchen: &Kitchen, state: &GridState, goal: Option<&GridState>, rng: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        Ok(self.act(kitchen, state, goal, rng)?)
    }
}

/// Always stays.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl Controller for Idle {
    fn act(&mut self, _: &Kitchen, _: &GridState, _: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        Ok(JointAction::STAY)
    }
}

impl Controller for ExpertController {
    fn begin(&mut self) {
        *self = ExpertController::new();
    }

    fn act(&mut self, kitchen: &Kitchen, state: &GridState, _: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        Ok(self.next_action(&kitchen.layout, state)?)
    }
}

/// A goal-conditioned agent run with no goal, as the baselines are.
#[derive(Debug, Clone, Copy)]
pub struct PlainPolicy<'a>(pub &'a GcrlAgent);

impl Controller for PlainPolicy<'_> {
    fn act(&mut self, kitchen: &Kitchen, state: &GridState, rng: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        Ok(self.0.act(kitchen, state, None, rng)?)
    }
}

/// `state` with its delivered count shifted by `by`.
fn shift_delivered(state: &GridState, by: i64) -> GridState {
    let mut s = state.clone();
    s.delivered = (s.delivered as i64 + by).max(0) as u32;
    s
}

/// Sub-goal chosen at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalChoice {
    pub cluster: usize,
    pub next: Option<usize>,
    /// Expert index of the sub-goal state.
    pub tick: usize,
}

/// How the active sub-goal is updated between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubgoalMode {
    /// Classify every state and take the sub-goal of its cluster.
    PerStep,
    /// Keep the sub-goal until it is reached or the state is classified into
    /// the next cluster on the route; classify afresh after `patience` steps
    /// without progress. Every round starts from the first cluster of the
    /// expert walk.
    Committed { patience: u32 },
}

#[derive(Debug, Clone)]
struct Progress {
    round: u32,
    cluster: usize,
    goal: Subgoal,
    age: u32,
}

/// Picks sub-goals from the planning graph and lets a goal-reaching policy
/// act on them.
///
/// The demonstration covers a single round, so states are compared relative to
/// the soups already delivered: the query state has its delivered count
/// reset to zero and the sub-goal handed to the policy has it raised by the same amount.
pub struct SubgoalController<'a, P> {
    pub policy: P,
    pub embedding: &'a EmbeddingModel,
    pub abstraction: &'a Abstraction,
    pub mode: SubgoalMode,
    progress: Option<Progress>,
}

impl<'a, P: GoalPolicy> SubgoalController<'a, P> {
    pub fn new(policy: P, embedding: &'a EmbeddingModel, abstraction: &'a Abstraction, mode: SubgoalMode) -> Self {
        Self {
            policy,
            embedding,
            abstraction,
            mode,
            progress: None,
        }
    }

    fn classify(&self, kitchen: &Kitchen, view: &GridState) -> Result<(usize, Subgoal), HarnessError> {
        let z = self.embedding.embed_state(&kitchen.layout, view)?;
        let sg = self.abstraction.graph.subgoal_for_latent(&self.abstraction.clusters, &z)?;
        Ok((self.abstraction.clusters.assign(&z), sg))
    }

    /// Updates and returns the active sub-goal for `state`, shifted to its round.
    pub fn subgoal(&mut self, kitchen: &Kitchen, state: &GridState) -> Result<(SubgoalChoice, GridState), HarnessError> {
        let round = state.delivered;
        let view = shift_delivered(state, -(round as i64));
        let graph = &self.abstraction.graph;
        let sg = match self.mode {
            SubgoalMode::PerStep => {
                self.progress = None;
                self.classify(kitchen, &view)?.1
            }
            SubgoalMode::Committed { patience } => {
                let (c, fresh) = self.classify(kitchen, &view)?;
                let p = match self.progress.take() {
                    Some(mut p) if p.round == round => {
                        p.age += 1;
                        match p.goal.next {
                            Some(n) if c == n || goal_reached(&view, &p.goal.state) => {
                                p = Progress {
                                    round,
                                    cluster: n,
                                    goal: graph.subgoal_from(n)?,
                                    age: 0,
                                }
                            }
                            _ if p.age > patience => {
                                p = Progress {
                                    round,
                                    cluster: fresh.cluster,
                                    goal: fresh,
                                    age: 0,
                                }
                            }
                            _ => {}
                        }
                        p
                    }
                    _ => {
                        let first = graph.walk[0];
                        Progress {
                            round,
                            cluster: first,
                            goal: graph.subgoal_from(first)?,
                            age: 0,
                        }
                    }
                };
                let sg = p.goal.clone();
                self.progress = Some(p);
                sg
            }
        };
        let choice = SubgoalChoice {
            cluster: match &self.progress {
                Some(p) => p.cluster,
                None => sg.cluster,
            },
            next: sg.next,
            tick: sg.tick,
        };
        Ok((choice, shift_delivered(&sg.state, round as i64)))
    }
}

impl<P: GoalPolicy> Controller for SubgoalController<'_, P> {
    fn begin(&mut self) {
        self.progress = None;
    }

    fn act(&mut self, kitchen: &Kitchen, state: &GridState, rng: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        let (_, goal) = self.subgoal(kitchen, state)?;
        self.policy.act_towards(kitchen, state, Some(&goal), rng)
    }
}

/// Test double that reaches any goal reachable within its search budget:
/// best-first search over joint successors, ordered by steps taken plus
/// twice the remaining mismatch, following the found plan.
#[derive(Debug, Clone)]
pub struct BfsGoalReacher {
    pub max_nodes: usize,
    plan: VecDeque<(JointAction, GridState)>,
    goal: Option<GridState>,
    /// The search for `goal` gave up; stay until the goal changes.
    failed: bool,
}

fn mismatch(s: &GridState, goal: &GridState) -> usize {
    let chefs: usize = s
        .chefs
        .iter()
        .zip(&goal.chefs)
        .map(|(a, b)| a.pos.manhattan(b.pos) as usize + usize::from(a.facing != b.facing) + 2 * usize::from(a.held != b.held))
        .sum();
    let counters = s.counters.iter().filter(|c| !goal.counters.contains(c)).count() + goal.counters.iter().filter(|c| !s.counters.contains(c)).count();
    let ovens = s.ovens.iter().zip(&goal.ovens).filter(|(a, b)| a.onions != b.onions || a.phase != b.phase).count();
    chefs + 2 * counters + 2 * ovens + 2 * s.delivered.abs_diff(goal.delivered) as usize
}

impl BfsGoalReacher {
    pub fn new(max_nodes: usize) -> Self {
        Self {
            max_nodes,
            plan: VecDeque::new(),
            goal: None,
            failed: false,
        }
    }

    fn search(&self, kitchen: &Kitchen, start: &GridState, goal: &GridState) -> Option<VecDeque<(JointAction, GridState)>> {
        let mut parent: HashMap<StateKey, (StateKey, JointAction)> = HashMap::new();
        let mut states: HashMap<StateKey, (GridState, usize)> = HashMap::new();
        let root = start.key();
        states.insert(root.clone(), (start.clone(), 0));
        let mut queue = BinaryHeap::from([(Reverse(2 * mismatch(start, goal)), Reverse(0usize), root.clone())]);
        let mut order = 0;
        while let Some((_, _, k)) = queue.pop() {
            let (s, depth) = states[&k].clone();
            for (a, next) in kitchen.successors(&s) {
                let nk = next.key();
                if nk == root || parent.contains_key(&nk) {
                    continue;
                }
                parent.insert(nk.clone(), (k.clone(), a));
                if goal_reached(&next, goal) {
                    states.insert(nk.clone(), (next, depth + 1));
                    let mut plan = VecDeque::new();
                    let mut cur = nk;
                    while cur != root {
                        let (p, a) = parent[&cur].clone();
                        plan.push_front((a, states[&cur].0.clone()));
                        cur = p;
                    }
                    return Some(plan);
                }
                let f = depth + 1 + 2 * mismatch(&next, goal);
                states.insert(nk.clone(), (next, depth + 1));
                if states.len() >= self.max_nodes {
                    return None;
                }
                order += 1;
                queue.push((Reverse(f), Reverse(order), nk));
            }
        }
        None
    }
}

impl GoalPolicy for BfsGoalReacher {
    fn act_towards(&mut self, kitchen: &Kitchen, state: &GridState, goal: Option<&GridState>, _: &mut ChaCha8Rng) -> Result<JointAction, HarnessError> {
        let Some(goal) = goal else {
            return Ok(JointAction::STAY);
        };
        if self.goal.as_ref() != Some(goal) || (self.plan.is_empty() && !self.failed) {
            self.goal = Some(goal.clone());
            let found = self.search(kitchen, state, goal);
            self.failed = found.is_none();
            self.plan = found.unwrap_or_default();
        }
        Ok(match self.plan.pop_front() {
            Some((a, _)) => a,
            None => JointAction::STAY,
        })
    }
}

/// One executed episode with the sub-goal active at each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub seed: u64,
    pub states: Vec<GridState>,
    pub actions: Vec<JointAction>,
    pub subgoals: Vec<SubgoalChoice>,
    /// Sub-goal states in the order they became active, shifted to their round.
    pub goals: Vec<GridState>,
    pub soups: u32,
}

/// Runs one full episode from `kitchen.reset(seed)` under sub-goal control.
/// A state with no route to the target ends the episode early.
pub fn execute_task<P: GoalPolicy>(
    controller: &mut SubgoalController<'_, P>,
    kitchen: &Kitchen,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ExecutionTrace, HarnessError> {
    controller.begin();
    let mut state = kitchen.reset(seed);
    let mut trace = ExecutionTrace {
        seed,
        states: vec![state.clone()],
        actions: Vec::new(),
        subgoals: Vec::new(),
        goals: Vec::new(),
        soups: 0,
    };
    while state.tick < kitchen.episode_limit {
        let (choice, goal) = match controller.subgoal(kitchen, &state) {
            Ok(x) => x,
            Err(HarnessError::Graph(GraphError::NoPath(_))) => break,
            Err(e) => return Err(e),
        };
        if trace.goals.last() != Some(&goal) {
            trace.goals.push(goal.clone());
        }
        let a = controller.policy.act_towards(kitchen, &state, Some(&goal), rng)?;
        let step = kitchen.step(&state, a)?;
        trace.soups += step.reward;
        trace.subgoals.push(choice);
        trace.actions.push(a);
        state = step.state;
        trace.states.push(state.clone());
    }
    Ok(trace)
}
