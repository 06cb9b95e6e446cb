//! Two-chef cooperative cooking gridworld.
//!
//! States are plain values: [`Kitchen::step`] returns a new state and never
//! touches its input, so any number of rollouts can share one [`Kitchen`].

mod dynamics;
mod layout;
mod observe;
mod state;
pub mod trajectory;

pub use dynamics::{random_joint_action, Kitchen, Step};
pub use layout::{Direction, Layout, Pos, RecipeKind, TileKind};
pub use observe::{observation_len, CELL_FEATURES, SELF_FEATURES};
pub use state::{goal_reached, Action, Chef, GridState, Held, JointAction, Oven, OvenPhase, StateKey, TIMER_BUCKET};

use thiserror::Error;

pub const COOK_TIME: u8 = 20;
pub const ONIONS_PER_SOUP: u8 = 3;
pub const RESET_RANDOM_STEPS: usize = 10;
pub const DEFAULT_EPISODE_LIMIT: u32 = 500;
pub const DEFAULT_WINDOW_RADIUS: usize = 2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("unknown layout character {ch:?} at row {row}, column {col}")]
    UnknownCharacter { ch: char, row: usize, col: usize },
    #[error("chef start {0} missing or not on a floor cell")]
    MissingChefStart(u8),
    #[error("chef start {0} appears more than once")]
    DuplicateChefStart(u8),
    #[error("layout lacks a required {0:?} tile")]
    MissingRequiredTile(TileKind),
    #[error("{0:?} tile is not allowed for this recipe")]
    UnexpectedTile(TileKind),
    #[error("row {row} has a different width from row 0")]
    RaggedGrid { row: usize },
    #[error("boundary cell ({x}, {y}) is floor")]
    BoundaryFloor { x: usize, y: usize },
    #[error("layout has no grid rows")]
    EmptyGrid,
    #[error("missing `recipe: plain|cilantro` header line")]
    MissingRecipeHeader,
    #[error("unknown recipe {0:?}")]
    UnknownRecipe(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("malformed trajectory: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Dense numeric encoding of a full state, used as input to the embedding
/// network. Positions are one-hot per axis; the tick is excluded.
pub fn state_features(layout: &Layout, state: &GridState) -> Vec<f64> {
    let (w, h) = (layout.width(), layout.height());
    let mut v = Vec::with_capacity(state_features_len(layout));
    for c in &state.chefs {
        let mut block = vec![0.0; w + h + 4 + 6];
        block[c.pos.x as usize] = 1.0;
        block[w + c.pos.y as usize] = 1.0;
        block[w + h + c.facing.index()] = 1.0;
        block[w + h + 4 + c.held.code() as usize] = 1.0;
        v.extend(block);
    }
    for o in &state.ovens {
        let mut block = [0.0; 9];
        block[o.onions as usize] = 1.0;
        block[4 + o.phase.code() as usize] = 1.0;
        block[8] = o.timer as f64 / COOK_TIME as f64;
        v.extend(block);
    }
    let mut items = [0.0; 5];
    for (_, item) in &state.counters {
        items[item.code() as usize - 1] += 1.0 / 3.0;
    }
    v.extend(items.map(|x: f64| x.min(1.0)));
    let mut delivered = [0.0; 3];
    delivered[(state.delivered as usize).min(2)] = 1.0;
    v.extend(delivered);
    v
}

pub fn state_features_len(layout: &Layout) -> usize {
    2 * (layout.width() + layout.height() + 10) + 9 * layout.ovens().len() + 5 + 3
}

#[cfg(test)]
mod tests;
