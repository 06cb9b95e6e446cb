//! Hard-coded expert controllers and recorded demonstrations.

mod plan;

pub use plan::{compile_round, first_step, static_path, Condition, PlanRunner, ScriptedPlan, Task, STUCK_LIMIT};

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

use crate::gridworld::trajectory::{read_trajectory, records_from, states_from, write_trajectory, TrajectoryHeader, TrajectoryRecord};
use crate::gridworld::{GridError, GridState, Held, JointAction, Kitchen, Layout, OvenPhase, Pos};

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("chef {chef} stuck at {at:?} on the way to {target:?}")]
    Stuck { chef: usize, at: Pos, target: Pos },
    #[error("a required tile has no reachable access cell")]
    Unreachable,
    #[error("no empty counter to put an item on")]
    NoFreeCounter,
    #[error("no floor cell to park the idle chef")]
    NoParkingCell,
    #[error("no soup delivered within {0} ticks")]
    NoDelivery(u32),
    #[error("demonstration was recorded on layout {found}, expected {expected}")]
    LayoutMismatch { expected: String, found: String },
    #[error("demonstration is empty")]
    Empty,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Expert that replans a fresh round whenever its current plan runs out,
/// so it keeps cooking for a whole episode.
#[derive(Debug, Clone)]
pub struct ExpertController {
    runner: Option<PlanRunner>,
}

impl Default for ExpertController {
    fn default() -> Self {
        Self::new()
    }
}

impl ExpertController {
    pub fn new() -> Self {
        Self { runner: None }
    }

    pub fn next_action(&mut self, layout: &Layout, state: &GridState) -> Result<JointAction, ExpertError> {
        for _ in 0..2 {
            let runner = match &mut self.runner {
                Some(r) if !r.finished() => r,
                _ => self.runner.insert(PlanRunner::new(compile_round(layout, state)?)),
            };
            let a = runner.next_action(layout, state)?;
            if !runner.finished() || a != JointAction::STAY {
                return Ok(a);
            }
        }
        Ok(JointAction::STAY)
    }
}

/// A single successful expert episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demonstration {
    pub header: TrajectoryHeader,
    pub records: Vec<TrajectoryRecord>,
}

impl Demonstration {
    pub fn states(&self, layout: &Layout) -> Result<Vec<GridState>, ExpertError> {
        Ok(states_from(layout, &self.records)?)
    }

    pub fn final_state(&self, layout: &Layout) -> Result<GridState, ExpertError> {
        let last = self.records.last().ok_or(ExpertError::Empty)?;
        Ok(GridState::from_key(layout, &last.state_key, last.tick)?)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), ExpertError> {
        Ok(write_trajectory(w, Some(&self.header), &self.records)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ExpertError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Loads a demonstration and checks that it belongs to `layout`.
    pub fn load(path: &Path, layout: &Layout) -> Result<Self, ExpertError> {
        let (header, records) = read_trajectory(BufReader::new(File::open(path)?))?;
        let header = header.ok_or_else(|| GridError::Format("missing header".into()))?;
        if header.layout_hash != layout.digest() {
            return Err(ExpertError::LayoutMismatch {
                expected: layout.digest(),
                found: header.layout_hash,
            });
        }
        if records.is_empty() {
            return Err(ExpertError::Empty);
        }
        let demo = Self { header, records };
        demo.states(layout)?;
        Ok(demo)
    }
}

/// Runs the expert from `reset(seed)` until the first delivery.
pub fn record_demonstration(kitchen: &Kitchen, seed: u64) -> Result<Demonstration, ExpertError> {
    let layout = &kitchen.layout;
    let mut state = kitchen.reset(seed);
    let mut ctrl = ExpertController::new();
    let (mut states, mut actions, mut rewards) = (vec![state.clone()], Vec::new(), Vec::new());
    while state.delivered == 0 {
        if state.tick >= kitchen.episode_limit {
            return Err(ExpertError::NoDelivery(kitchen.episode_limit));
        }
        let a = ctrl.next_action(layout, &state)?;
        let step = kitchen.step(&state, a)?;
        actions.push(a);
        rewards.push(step.reward);
        state = step.state;
        states.push(state.clone());
    }
    Ok(Demonstration {
        header: TrajectoryHeader {
            layout_hash: layout.digest(),
            recipe: layout.recipe(),
            seed,
        },
        records: records_from(&states, &actions, &rewards),
    })
}

/// Coarse task phase of a state, used for labeling and rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    FetchOnion,
    LoadOven,
    CookWait,
    Plate,
    Serve,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::FetchOnion, Phase::LoadOven, Phase::CookWait, Phase::Plate, Phase::Serve];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::FetchOnion => "fetch-onion",
            Phase::LoadOven => "load-oven",
            Phase::CookWait => "cook-wait",
            Phase::Plate => "plate",
            Phase::Serve => "serve",
        }
    }
}

pub fn phase_of(state: &GridState) -> Phase {
    let holds = |h: Held| state.chefs.iter().any(|c| c.held == h);
    let oven = |p: OvenPhase| state.ovens.iter().any(|o| o.phase == p);
    if holds(Held::SoupPlate) || holds(Held::CilantroSoupPlate) {
        Phase::Serve
    } else if holds(Held::Onion) {
        Phase::LoadOven
    } else if oven(OvenPhase::Cooking) {
        Phase::CookWait
    } else if oven(OvenPhase::Ready) || holds(Held::Plate) {
        Phase::Plate
    } else {
        Phase::FetchOnion
    }
}
