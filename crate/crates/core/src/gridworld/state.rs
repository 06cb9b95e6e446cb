use serde::{Deserialize, Serialize};

use super::layout::{Direction, Layout, Pos};
use super::{GridError, COOK_TIME, ONIONS_PER_SOUP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Held {
    Nothing,
    Onion,
    Plate,
    SoupPlate,
    CilantroSoupPlate,
    Cilantro,
}

impl Held {
    pub const ALL: [Held; 6] = [
        Held::Nothing,
        Held::Onion,
        Held::Plate,
        Held::SoupPlate,
        Held::CilantroSoupPlate,
        Held::Cilantro,
    ];

    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn from_code(code: u16) -> Option<Held> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn is_nothing(self) -> bool {
        self == Held::Nothing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chef {
    pub pos: Pos,
    pub facing: Direction,
    pub held: Held,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OvenPhase {
    Empty,
    Raw,
    Cooking,
    Ready,
}

impl OvenPhase {
    pub const ALL: [OvenPhase; 4] = [OvenPhase::Empty, OvenPhase::Raw, OvenPhase::Cooking, OvenPhase::Ready];

    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn from_code(code: u16) -> Option<OvenPhase> {
        Self::ALL.get(code as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Oven {
    pub onions: u8,
    pub timer: u8,
    pub phase: OvenPhase,
}

impl Oven {
    pub const EMPTY: Oven = Oven {
        onions: 0,
        timer: 0,
        phase: OvenPhase::Empty,
    };
}

/// Full world configuration. Value type: stepping never mutates its input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub chefs: [Chef; 2],
    /// One entry per oven, in layout order.
    pub ovens: Vec<Oven>,
    /// Occupied counters as `(counter index, item)`, sorted by index.
    pub counters: Vec<(u16, Held)>,
    pub delivered: u32,
    pub tick: u32,
}

impl GridState {
    pub fn counter_item(&self, idx: usize) -> Held {
        self.counters
            .binary_search_by_key(&(idx as u16), |(i, _)| *i)
            .map_or(Held::Nothing, |k| self.counters[k].1)
    }

    pub fn set_counter_item(&mut self, idx: usize, item: Held) {
        let idx = idx as u16;
        match self.counters.binary_search_by_key(&idx, |(i, _)| *i) {
            Ok(k) if item.is_nothing() => {
                self.counters.remove(k);
            }
            Ok(k) => self.counters[k].1 = item,
            Err(k) if !item.is_nothing() => self.counters.insert(k, (idx, item)),
            Err(_) => {}
        }
    }

    pub fn chef_at(&self, p: Pos) -> Option<usize> {
        self.chefs.iter().position(|c| c.pos == p)
    }

    /// Checks the structural invariants against `layout`.
    pub fn validate(&self, layout: &Layout) -> Result<(), GridError> {
        let bad = |msg: String| Err(GridError::InvalidState(msg));
        for (i, c) in self.chefs.iter().enumerate() {
            if !layout.is_floor(c.pos) {
                return bad(format!("chef {i} is off the floor at {}", c.pos));
            }
        }
        if self.chefs[0].pos == self.chefs[1].pos {
            return bad("chefs share a cell".into());
        }
        if self.ovens.len() != layout.ovens().len() {
            return bad(format!("expected {} ovens, found {}", layout.ovens().len(), self.ovens.len()));
        }
        for (i, o) in self.ovens.iter().enumerate() {
            let ok = match o.phase {
                OvenPhase::Empty => o.onions == 0 && o.timer == 0,
                OvenPhase::Raw => (1..=ONIONS_PER_SOUP).contains(&o.onions) && o.timer == 0,
                OvenPhase::Cooking => o.onions == ONIONS_PER_SOUP && (1..=COOK_TIME).contains(&o.timer),
                OvenPhase::Ready => o.onions == ONIONS_PER_SOUP && o.timer == 0,
            };
            if !ok {
                return bad(format!("oven {i} inconsistent: {o:?}"));
            }
        }
        let mut last: Option<u16> = None;
        for (idx, item) in &self.counters {
            if *idx as usize >= layout.counters().len() || item.is_nothing() || last.is_some_and(|l| l >= *idx) {
                return bad(format!("bad counter entry ({idx}, {item:?})"));
            }
            last = Some(*idx);
        }
        Ok(())
    }

    /// Canonical descriptor; excludes the tick.
    pub fn key(&self) -> StateKey {
        let mut v = Vec::with_capacity(9 + self.ovens.len() * 3 + self.counters.len() * 2);
        for c in &self.chefs {
            v.extend([c.pos.x as u16, c.pos.y as u16, c.facing.index() as u16, c.held.code()]);
        }
        for o in &self.ovens {
            v.extend([o.onions as u16, o.phase.code(), o.timer as u16]);
        }
        // sparse counter block keeps keys short; the entry count makes it self-delimiting
        v.push(self.counters.len() as u16);
        for (idx, item) in &self.counters {
            v.extend([*idx, item.code()]);
        }
        v.push(self.delivered.min(u16::MAX as u32) as u16);
        StateKey(v)
    }

    /// Rebuilds a state from its key. `tick` is not part of the key.
    pub fn from_key(layout: &Layout, key: &StateKey, tick: u32) -> Result<GridState, GridError> {
        let k = &key.0;
        let bad = || GridError::InvalidState(format!("malformed state key {k:?}"));
        let mut it = k.iter().copied();
        let mut next = || it.next().ok_or_else(bad);
        let mut chefs = [Chef {
            pos: Pos::new(0, 0),
            facing: Direction::Up,
            held: Held::Nothing,
        }; 2];
        for c in &mut chefs {
            c.pos = Pos::new(next()? as i32, next()? as i32);
            c.facing = Direction::from_index(next()? as usize).ok_or_else(bad)?;
            c.held = Held::from_code(next()?).ok_or_else(bad)?;
        }
        let mut ovens = Vec::with_capacity(layout.ovens().len());
        for _ in layout.ovens() {
            let onions = next()? as u8;
            let phase = OvenPhase::from_code(next()?).ok_or_else(bad)?;
            let timer = next()? as u8;
            ovens.push(Oven { onions, timer, phase });
        }
        let n = next()?;
        let mut counters = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let idx = next()?;
            counters.push((idx, Held::from_code(next()?).ok_or_else(bad)?));
        }
        let delivered = next()? as u32;
        if next().is_ok() {
            return Err(bad());
        }
        let s = GridState {
            chefs,
            ovens,
            counters,
            delivered,
            tick,
        };
        s.validate(layout)?;
        Ok(s)
    }

    /// Returns a copy with chef indices exchanged.
    pub fn swapped_chefs(&self) -> GridState {
        let mut s = self.clone();
        s.chefs.swap(0, 1);
        s
    }
}

/// Cook-timer granularity used by [`goal_reached`].
pub const TIMER_BUCKET: u8 = 5;

/// Success predicate for goal states: everything must match except the tick,
/// with cook timers compared in buckets of [`TIMER_BUCKET`].
pub fn goal_reached(state: &GridState, goal: &GridState) -> bool {
    state.chefs == goal.chefs
        && state.delivered == goal.delivered
        && state.counters == goal.counters
        && state.ovens.len() == goal.ovens.len()
        && state.ovens.iter().zip(&goal.ovens).all(|(a, b)| {
            a.onions == b.onions && a.phase == b.phase && a.timer / TIMER_BUCKET == b.timer / TIMER_BUCKET
        })
}

/// Ordered flat descriptor of a [`GridState`] with the tick removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateKey(pub Vec<u16>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveUp,
    MoveDown,
    MoveLeft,
    MoveRight,
    Stay,
    Interact,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] = [
        Action::MoveUp,
        Action::MoveDown,
        Action::MoveLeft,
        Action::MoveRight,
        Action::Stay,
        Action::Interact,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::MoveUp => Some(Direction::Up),
            Action::MoveDown => Some(Direction::Down),
            Action::MoveLeft => Some(Direction::Left),
            Action::MoveRight => Some(Direction::Right),
            _ => None,
        }
    }

    pub fn toward(dir: Direction) -> Action {
        match dir {
            Direction::Up => Action::MoveUp,
            Direction::Down => Action::MoveDown,
            Direction::Left => Action::MoveLeft,
            Direction::Right => Action::MoveRight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub [Action; 2]);

impl JointAction {
    pub const STAY: JointAction = JointAction([Action::Stay, Action::Stay]);

    /// All 36 joint actions in a fixed order.
    pub fn all() -> impl Iterator<Item = JointAction> {
        Action::ALL
            .into_iter()
            .flat_map(|a| Action::ALL.into_iter().map(move |b| JointAction([a, b])))
    }
}
