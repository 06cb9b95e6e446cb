use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layout::{Layout, Pos, TileKind};
use super::state::{Action, Chef, GridState, Held, JointAction, Oven, OvenPhase};
use super::{GridError, COOK_TIME, DEFAULT_EPISODE_LIMIT, DEFAULT_WINDOW_RADIUS, ONIONS_PER_SOUP, RESET_RANDOM_STEPS};

/// Result of one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: GridState,
    /// Soups delivered during this transition.
    pub reward: u32,
    pub done: bool,
}

/// A layout plus the episode and observation settings that go with it.
#[derive(Debug, Clone)]
pub struct Kitchen {
    pub layout: Layout,
    pub episode_limit: u32,
    pub window_radius: usize,
}

impl Kitchen {
    pub fn new(layout: Layout) -> Self {
        Self {
            layout,
            episode_limit: DEFAULT_EPISODE_LIMIT,
            window_radius: DEFAULT_WINDOW_RADIUS,
        }
    }

    pub fn with_episode_limit(mut self, limit: u32) -> Self {
        self.episode_limit = limit;
        self
    }

    pub fn with_window_radius(mut self, radius: usize) -> Self {
        self.window_radius = radius;
        self
    }

    /// Fixed starting configuration at tick 0.
    pub fn initial_state(&self) -> GridState {
        let starts = self.layout.chef_starts();
        GridState {
            chefs: starts.map(|(pos, facing)| Chef {
                pos,
                facing,
                held: Held::Nothing,
            }),
            ovens: vec![Oven::EMPTY; self.layout.ovens().len()],
            counters: Vec::new(),
            delivered: 0,
            tick: 0,
        }
    }

    /// Initial configuration advanced by ten uniformly random joint actions.
    pub fn reset(&self, seed: u64) -> GridState {
        self.reset_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn reset_with<R: Rng + ?Sized>(&self, rng: &mut R) -> GridState {
        let mut s = self.initial_state();
        for _ in 0..RESET_RANDOM_STEPS {
            s = self.transition(&s, random_joint_action(rng)).0;
        }
        s
    }

    pub fn step(&self, state: &GridState, action: JointAction) -> Result<Step, GridError> {
        state.validate(&self.layout)?;
        let (next, reward) = self.transition(state, action);
        let done = next.tick >= self.episode_limit;
        Ok(Step {
            state: next,
            reward,
            done,
        })
    }

    /// Transition without validation; callers guarantee a valid state.
    pub(crate) fn transition(&self, s: &GridState, action: JointAction) -> (GridState, u32) {
        let layout = &self.layout;
        let mut n = s.clone();

        for oven in &mut n.ovens {
            if oven.phase == OvenPhase::Cooking {
                oven.timer -= 1;
                if oven.timer == 0 {
                    oven.phase = OvenPhase::Ready;
                }
            }
        }

        // Moves turn the chef even when blocked.
        let here = [s.chefs[0].pos, s.chefs[1].pos];
        let mut target = here;
        for i in 0..2 {
            if let Some(dir) = action.0[i].direction() {
                n.chefs[i].facing = dir;
                let t = here[i].offset(dir);
                if layout.is_floor(t) {
                    target[i] = t;
                }
            }
        }
        loop {
            let mut changed = false;
            if target[0] == here[1] && target[1] == here[0] && here[0] != here[1] && target != here {
                target = here;
                changed = true;
            }
            if target[0] == target[1] {
                // contested cell: chef 0 keeps priority
                if target[1] != here[1] {
                    target[1] = here[1];
                } else {
                    target[0] = here[0];
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }
        n.chefs[0].pos = target[0];
        n.chefs[1].pos = target[1];

        let mut reward = 0;
        for i in 0..2 {
            if action.0[i] == Action::Interact {
                reward += self.interact(&mut n, i);
            }
        }
        n.delivered += reward;
        n.tick += 1;
        (n, reward)
    }

    fn interact(&self, n: &mut GridState, i: usize) -> u32 {
        let layout = &self.layout;
        let chef = n.chefs[i];
        let front: Pos = chef.pos.offset(chef.facing);
        let held = chef.held;
        let mut new_held = held;
        let mut reward = 0;
        match layout.tile(front) {
            TileKind::OnionDispenser if held.is_nothing() => new_held = Held::Onion,
            TileKind::PlateDispenser if held.is_nothing() => new_held = Held::Plate,
            TileKind::CilantroDispenser if held.is_nothing() => new_held = Held::Cilantro,
            TileKind::Oven => {
                let Some(k) = layout.oven_index(front) else { return 0 };
                let oven = &mut n.ovens[k];
                match (held, oven.phase) {
                    (Held::Onion, OvenPhase::Empty | OvenPhase::Raw) if oven.onions < ONIONS_PER_SOUP => {
                        oven.onions += 1;
                        oven.phase = OvenPhase::Raw;
                        new_held = Held::Nothing;
                    }
                    (Held::Plate, OvenPhase::Ready) => {
                        *oven = Oven::EMPTY;
                        new_held = Held::SoupPlate;
                    }
                    (_, OvenPhase::Raw) if oven.onions == ONIONS_PER_SOUP => {
                        oven.phase = OvenPhase::Cooking;
                        oven.timer = COOK_TIME;
                    }
                    _ => {}
                }
            }
            TileKind::ServingArea if held == layout.recipe().finished_dish() => {
                new_held = Held::Nothing;
                reward = 1;
            }
            TileKind::Wall => {
                let Some(k) = layout.counter_index(front) else { return 0 };
                let on_counter = n.counter_item(k);
                match (held, on_counter) {
                    (Held::Cilantro, Held::SoupPlate) => {
                        n.set_counter_item(k, Held::CilantroSoupPlate);
                        new_held = Held::Nothing;
                    }
                    (Held::SoupPlate, Held::Cilantro) => {
                        n.set_counter_item(k, Held::Nothing);
                        new_held = Held::CilantroSoupPlate;
                    }
                    (Held::Nothing, item) if !item.is_nothing() => {
                        n.set_counter_item(k, Held::Nothing);
                        new_held = item;
                    }
                    (item, Held::Nothing) if !item.is_nothing() => {
                        n.set_counter_item(k, item);
                        new_held = Held::Nothing;
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        n.chefs[i].held = new_held;
        reward
    }

    /// Every joint successor of `state`, in [`JointAction::all`] order.
    pub fn successors<'a>(&'a self, state: &'a GridState) -> impl Iterator<Item = (JointAction, GridState)> + 'a {
        JointAction::all().map(move |a| (a, self.transition(state, a).0))
    }
}

pub fn random_joint_action<R: Rng + ?Sized>(rng: &mut R) -> JointAction {
    JointAction([
        Action::from_index(rng.gen_range(0..Action::COUNT)),
        Action::from_index(rng.gen_range(0..Action::COUNT)),
    ])
}
