use serde::Serialize;
use std::fmt::Write as _;

use super::ExecutionTrace;
use crate::expert::{phase_of, Phase};
use crate::gridworld::{GridState, Held, Layout, OvenPhase, Pos};

fn held_char(h: Held) -> Option<char> {
    match h {
        Held::Nothing => None,
        Held::Onion => Some('o'),
        Held::Plate => Some('p'),
        Held::SoupPlate => Some('s'),
        Held::CilantroSoupPlate => Some('z'),
        Held::Cilantro => Some('c'),
    }
}

fn held_name(h: Held) -> &'static str {
    match h {
        Held::Nothing => "nothing",
        Held::Onion => "onion",
        Held::Plate => "plate",
        Held::SoupPlate => "soup",
        Held::CilantroSoupPlate => "cilantro-soup",
        Held::Cilantro => "cilantro",
    }
}

fn oven_name(p: OvenPhase) -> &'static str {
    match p {
        OvenPhase::Empty => "empty",
        OvenPhase::Raw => "raw",
        OvenPhase::Cooking => "cooking",
        OvenPhase::Ready => "ready",
    }
}

/// ASCII grid of `state`: chefs as `1`/`2`, counter items as lowercase letters,
/// followed by one line per chef and one for the ovens.
pub fn render_state(layout: &Layout, state: &GridState) -> String {
    let mut out = String::new();
    for y in 0..layout.height() {
        for x in 0..layout.width() {
            let p = Pos::new(x as i32, y as i32);
            let ch = match state.chef_at(p) {
                Some(c) => char::from(b'1' + c as u8),
                None => match layout.counter_index(p).and_then(|i| held_char(state.counter_item(i))) {
                    Some(c) => c,
                    None => layout.tile(p).to_char(),
                },
            };
            out.push(ch);
        }
        out.push('\n');
    }
    for (i, c) in state.chefs.iter().enumerate() {
        let _ = writeln!(out, "chef {} at ({},{}) facing {:?} holding {}", i + 1, c.pos.x, c.pos.y, c.facing, held_name(c.held));
    }
    let ovens: Vec<String> = state
        .ovens
        .iter()
        .map(|o| format!("{} onions {} timer {}", oven_name(o.phase), o.onions, o.timer))
        .collect();
    let _ = writeln!(out, "ovens: {}; delivered {}", ovens.join(", "), state.delivered);
    out
}

/// One rendered sub-goal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    /// Episode step at which the sub-goal became active.
    pub step: usize,
    pub phase: Phase,
    /// Summary line followed by the grid of the sub-goal state.
    pub text: String,
}

/// One frame per change of the active sub-goal in `trace`.
pub fn render_subgoals(trace: &ExecutionTrace, layout: &Layout) -> Vec<Frame> {
    let mut frames = Vec::new();
    let mut goals = trace.goals.iter();
    let mut prev = None;
    for (step, choice) in trace.subgoals.iter().enumerate() {
        let key = (choice.tick, trace.states[step].delivered);
        if prev == Some(key) {
            continue;
        }
        prev = Some(key);
        let Some(goal) = goals.next() else { break };
        let phase = phase_of(goal);
        let next = choice.next.map_or("target".to_string(), |n| n.to_string());
        let mut text = format!(
            "subgoal {} at step {}: cluster {} -> {}, expert step {}, phase {}\n",
            frames.len(),
            step,
            choice.cluster,
            next,
            choice.tick,
            phase.as_str()
        );
        text.push_str(&render_state(layout, goal));
        frames.push(Frame { step, phase, text });
    }
    frames
}
