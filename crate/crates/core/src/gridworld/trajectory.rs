//! Line-delimited JSON trajectory files.
//!
//! An optional header line `{"layout_hash": .., "recipe": .., "seed": ..}` is
//! followed by one record per tick: `{"tick", "state_key", "joint_action", "reward"}`.
//! `joint_action` is the action taken in that state (`null` on the final
//! record) and `reward` the soups that action delivered.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use super::layout::{Layout, RecipeKind};
use super::state::{GridState, JointAction, StateKey};
use super::GridError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub layout_hash: String,
    pub recipe: RecipeKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tick: u32,
    pub state_key: StateKey,
    pub joint_action: Option<JointAction>,
    pub reward: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Header(TrajectoryHeader),
    Record(TrajectoryRecord),
}

pub fn write_trajectory<W: Write>(
    mut w: W,
    header: Option<&TrajectoryHeader>,
    records: &[TrajectoryRecord],
) -> Result<(), GridError> {
    if let Some(h) = header {
        serde_json::to_writer(&mut w, h)?;
        w.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(r: R) -> Result<(Option<TrajectoryHeader>, Vec<TrajectoryRecord>), GridError> {
    let mut header = None;
    let mut records = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Line>(&line) {
            Ok(Line::Header(h)) if n == 0 => header = Some(h),
            Ok(Line::Record(rec)) => records.push(rec),
            Ok(Line::Header(_)) => return Err(GridError::Format(format!("header on line {}", n + 1))),
            Err(e) => return Err(GridError::Format(format!("line {}: {e}", n + 1))),
        }
    }
    Ok((header, records))
}

/// Builds records from a state sequence and the actions between them.
pub fn records_from(states: &[GridState], actions: &[JointAction], rewards: &[u32]) -> Vec<TrajectoryRecord> {
    states
        .iter()
        .enumerate()
        .map(|(t, s)| TrajectoryRecord {
            tick: s.tick,
            state_key: s.key(),
            joint_action: actions.get(t).copied(),
            reward: rewards.get(t).copied().unwrap_or(0),
        })
        .collect()
}

/// Decodes every record back into a full state.
pub fn states_from(layout: &Layout, records: &[TrajectoryRecord]) -> Result<Vec<GridState>, GridError> {
    records
        .iter()
        .map(|r| GridState::from_key(layout, &r.state_key, r.tick))
        .collect()
}
