//! Egocentric partial observations.
//!
//! Each chef sees a `(2r+1) x (2r+1)` window centred on itself, laid out
//! row-major in absolute orientation. Per cell:
//!
//! | slot  | meaning                                                        |
//! |-------|----------------------------------------------------------------|
//! | 0..6  | tile one-hot: wall, onion, plate, oven, serving, cilantro      |
//! | 6..11 | item one-hot (counter item or teammate's held item)            |
//! | 11    | teammate present                                               |
//! | 12..16| oven: onions / 3, cooking, ready, timer / 20                   |
//!
//! Floor cells have an all-zero tile block; cells beyond the grid read as wall.
//! After the window: own held item (6), own facing (4), normalized tick (1).

use super::dynamics::Kitchen;
use super::layout::{Pos, TileKind};
use super::state::{GridState, Held, OvenPhase};
use super::{COOK_TIME, ONIONS_PER_SOUP};

pub const CELL_FEATURES: usize = 16;
pub const SELF_FEATURES: usize = 6 + 4 + 1;

/// Observation length for a window radius. Independent of the layout, so one
/// policy can act in every kitchen.
pub const fn observation_len(radius: usize) -> usize {
    let side = 2 * radius + 1;
    side * side * CELL_FEATURES + SELF_FEATURES
}

fn tile_slot(kind: TileKind) -> Option<usize> {
    match kind {
        TileKind::Floor => None,
        TileKind::Wall => Some(0),
        TileKind::OnionDispenser => Some(1),
        TileKind::PlateDispenser => Some(2),
        TileKind::Oven => Some(3),
        TileKind::ServingArea => Some(4),
        TileKind::CilantroDispenser => Some(5),
    }
}

fn item_slot(item: Held) -> Option<usize> {
    match item {
        Held::Nothing => None,
        Held::Onion => Some(0),
        Held::Plate => Some(1),
        Held::SoupPlate => Some(2),
        Held::CilantroSoupPlate => Some(3),
        Held::Cilantro => Some(4),
    }
}

impl Kitchen {
    pub fn observation_len(&self) -> usize {
        observation_len(self.window_radius)
    }

    pub fn observe(&self, state: &GridState, chef: usize) -> Vec<f64> {
        let mut out = Vec::new();
        self.observe_into(state, chef, &mut out);
        out
    }

    /// Writes chef `chef`'s observation into `out`, replacing its contents.
    pub fn observe_into(&self, state: &GridState, chef: usize, out: &mut Vec<f64>) {
        assert!(chef < 2, "chef index must be 0 or 1");
        let layout = &self.layout;
        let r = self.window_radius as i32;
        out.clear();
        out.resize(self.observation_len(), 0.0);
        let me = state.chefs[chef];
        let mate = state.chefs[1 - chef];
        let mut base = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                let p = Pos::new(me.pos.x + dx, me.pos.y + dy);
                let cell = &mut out[base..base + CELL_FEATURES];
                let kind = layout.tile(p);
                if let Some(k) = tile_slot(kind) {
                    cell[k] = 1.0;
                }
                let item = if p == mate.pos {
                    cell[11] = 1.0;
                    mate.held
                } else if let Some(c) = layout.counter_index(p) {
                    state.counter_item(c)
                } else {
                    Held::Nothing
                };
                if let Some(k) = item_slot(item) {
                    cell[6 + k] = 1.0;
                }
                if let Some(o) = layout.oven_index(p) {
                    let oven = state.ovens[o];
                    cell[12] = oven.onions as f64 / ONIONS_PER_SOUP as f64;
                    cell[13] = (oven.phase == OvenPhase::Cooking) as u8 as f64;
                    cell[14] = (oven.phase == OvenPhase::Ready) as u8 as f64;
                    cell[15] = oven.timer as f64 / COOK_TIME as f64;
                }
                base += CELL_FEATURES;
            }
        }
        out[base + me.held.code() as usize] = 1.0;
        out[base + 6 + me.facing.index()] = 1.0;
        out[base + 10] = (state.tick as f64 / self.episode_limit.max(1) as f64).min(1.0);
    }
}
