//! Goal descriptor fed to the policy next to the observation.
//!
//! Everything is expressed relative to the observing chef, so the same
//! network serves both chefs and any layout size. Layout:
//!
//! | slots  | meaning                                                         |
//! |--------|-----------------------------------------------------------------|
//! | 0..2   | own goal offset dx, dy (clipped to +-8, scaled by 1/8)          |
//! | 2..8   | sign one-hots of dx and dy (neg, zero, pos)                     |
//! | 8..12  | own goal facing                                                 |
//! | 12..18 | own goal held item                                              |
//! | 18..21 | own position / facing / held already match                      |
//! | 21..23 | teammate goal position relative to me                           |
//! | 23..25 | teammate goal position relative to the teammate                 |
//! | 25..31 | teammate goal held item                                         |
//! | 31     | teammate fully matches                                          |
//! | 32..56 | two oven slots of 12 (see [`OVEN_FEATURES`])                    |
//! | 56..71 | counters: mismatches, nearest mismatch offset, goal/current item|
//! | 71     | soups still to deliver (clipped to 1)                           |

use crate::gridworld::{Chef, GridState, Held, Layout, Pos, COOK_TIME, TIMER_BUCKET};

pub const OVEN_SLOTS: usize = 2;
/// present, dx, dy, goal onions, goal phase (4), goal timer bucket,
/// onion gap, phase match, full match
pub const OVEN_FEATURES: usize = 12;
pub const GOAL_DESCRIPTOR_LEN: usize = 32 + OVEN_SLOTS * OVEN_FEATURES + 15 + 1;

const REACH: f64 = 8.0;

fn rel(d: i32) -> f64 {
    (d as f64).clamp(-REACH, REACH) / REACH
}

fn sign_slot(d: i32) -> usize {
    match d.signum() {
        -1 => 0,
        0 => 1,
        _ => 2,
    }
}

fn bucket_span() -> f64 {
    (COOK_TIME as u32 / TIMER_BUCKET as u32) as f64
}

/// Writes chef `chef`'s descriptor of `goal` as seen from `state` into `out`
/// (length [`GOAL_DESCRIPTOR_LEN`]). `None` means no goal: all zeros.
pub fn goal_descriptor_into(layout: &Layout, state: &GridState, goal: Option<&GridState>, chef: usize, out: &mut [f64]) {
    assert_eq!(out.len(), GOAL_DESCRIPTOR_LEN);
    out.fill(0.0);
    let Some(goal) = goal else { return };
    let me: Chef = state.chefs[chef];
    let mate: Chef = state.chefs[1 - chef];
    let gme: Chef = goal.chefs[chef];
    let gmate: Chef = goal.chefs[1 - chef];

    let (dx, dy) = (gme.pos.x - me.pos.x, gme.pos.y - me.pos.y);
    out[0] = rel(dx);
    out[1] = rel(dy);
    out[2 + sign_slot(dx)] = 1.0;
    out[5 + sign_slot(dy)] = 1.0;
    out[8 + gme.facing.index()] = 1.0;
    out[12 + gme.held.code() as usize] = 1.0;
    out[18] = (me.pos == gme.pos) as u8 as f64;
    out[19] = (me.facing == gme.facing) as u8 as f64;
    out[20] = (me.held == gme.held) as u8 as f64;

    out[21] = rel(gmate.pos.x - me.pos.x);
    out[22] = rel(gmate.pos.y - me.pos.y);
    out[23] = rel(gmate.pos.x - mate.pos.x);
    out[24] = rel(gmate.pos.y - mate.pos.y);
    out[25 + gmate.held.code() as usize] = 1.0;
    out[31] = (mate == gmate) as u8 as f64;

    for (k, (&p, (o, g))) in layout.ovens().iter().zip(state.ovens.iter().zip(&goal.ovens)).take(OVEN_SLOTS).enumerate() {
        let b = &mut out[32 + k * OVEN_FEATURES..32 + (k + 1) * OVEN_FEATURES];
        b[0] = 1.0;
        b[1] = rel(p.x - me.pos.x);
        b[2] = rel(p.y - me.pos.y);
        b[3] = g.onions as f64 / 3.0;
        b[4 + g.phase.code() as usize] = 1.0;
        b[8] = (g.timer / TIMER_BUCKET) as f64 / bucket_span();
        b[9] = (g.onions as f64 - o.onions as f64) / 3.0;
        b[10] = (g.phase == o.phase) as u8 as f64;
        b[11] = (g.onions == o.onions && g.phase == o.phase && g.timer / TIMER_BUCKET == o.timer / TIMER_BUCKET) as u8 as f64;
    }

    let base = 32 + OVEN_SLOTS * OVEN_FEATURES;
    let mut mismatches = 0;
    let mut nearest: Option<(i32, Pos, Held, Held)> = None;
    for (k, &p) in layout.counters().iter().enumerate() {
        let (have, want) = (state.counter_item(k), goal.counter_item(k));
        if have != want {
            mismatches += 1;
            let d = p.manhattan(me.pos);
            if nearest.is_none_or(|(best, ..)| d < best) {
                nearest = Some((d, p, want, have));
            }
        }
    }
    out[base] = (mismatches as f64 / 3.0).min(1.0);
    if let Some((_, p, want, have)) = nearest {
        out[base + 1] = rel(p.x - me.pos.x);
        out[base + 2] = rel(p.y - me.pos.y);
        out[base + 3 + want.code() as usize] = 1.0;
        out[base + 9 + have.code() as usize] = 1.0;
    }
    out[base + 15] = (goal.delivered.saturating_sub(state.delivered) as f64).min(1.0);
}

pub fn goal_descriptor(layout: &Layout, state: &GridState, goal: Option<&GridState>, chef: usize) -> Vec<f64> {
    let mut v = vec![0.0; GOAL_DESCRIPTOR_LEN];
    goal_descriptor_into(layout, state, goal, chef, &mut v);
    v
}

