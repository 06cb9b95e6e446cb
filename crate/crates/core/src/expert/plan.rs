use serde::{Deserialize, Serialize};

use crate::gridworld::{Action, Direction, GridState, Held, JointAction, Layout, OvenPhase, Pos, RecipeKind, TileKind};

use super::ExpertError;

/// Consecutive blocked moves tolerated before a plan is declared stuck.
pub const STUCK_LIMIT: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    OvenReady(usize),
    ChefAt(usize, Pos),
    Never,
}

impl Condition {
    pub fn holds(self, state: &GridState) -> bool {
        match self {
            Condition::OvenReady(k) => state.ovens.get(k).is_some_and(|o| o.phase == OvenPhase::Ready),
            Condition::ChefAt(i, p) => state.chefs[i].pos == p,
            Condition::Never => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    GoTo(Pos),
    Face(Direction),
    Interact,
    Wait(u32),
    WaitUntil(Condition),
}

/// Per-chef task lists for one cooking round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedPlan {
    pub tasks: [Vec<Task>; 2],
}

/// Executes a [`ScriptedPlan`] one joint action at a time.
#[derive(Debug, Clone)]
pub struct PlanRunner {
    plan: ScriptedPlan,
    cursor: [usize; 2],
    wait_left: [Option<u32>; 2],
    blocked: [u32; 2],
}

impl PlanRunner {
    pub fn new(plan: ScriptedPlan) -> Self {
        Self {
            plan,
            cursor: [0; 2],
            wait_left: [None; 2],
            blocked: [0; 2],
        }
    }

    pub fn plan(&self) -> &ScriptedPlan {
        &self.plan
    }

    /// True once neither chef has anything left to do but wait forever.
    pub fn finished(&self) -> bool {
        (0..2).all(|i| {
            self.plan.tasks[i][self.cursor[i].min(self.plan.tasks[i].len())..]
                .iter()
                .all(|t| *t == Task::WaitUntil(Condition::Never))
        })
    }

    pub fn next_action(&mut self, layout: &Layout, state: &GridState) -> Result<JointAction, ExpertError> {
        Ok(JointAction([self.chef_action(layout, state, 0)?, self.chef_action(layout, state, 1)?]))
    }

    fn chef_action(&mut self, layout: &Layout, state: &GridState, i: usize) -> Result<Action, ExpertError> {
        let me = state.chefs[i];
        let other = state.chefs[1 - i].pos;
        while let Some(&task) = self.plan.tasks[i].get(self.cursor[i]) {
            match task {
                Task::GoTo(target) => {
                    if me.pos == target {
                        self.blocked[i] = 0;
                        self.cursor[i] += 1;
                        continue;
                    }
                    if let Some(dir) = first_step(layout, me.pos, target, &[other]) {
                        self.blocked[i] = 0;
                        return Ok(Action::toward(dir));
                    }
                    if first_step(layout, me.pos, target, &[]).is_none() {
                        return Err(ExpertError::Stuck { chef: i, at: me.pos, target });
                    }
                    self.blocked[i] += 1;
                    if self.blocked[i] > STUCK_LIMIT {
                        return Err(ExpertError::Stuck { chef: i, at: me.pos, target });
                    }
                    return Ok(Action::Stay);
                }
                Task::Face(d) => {
                    if me.facing == d {
                        self.cursor[i] += 1;
                        continue;
                    }
                    return Ok(Action::toward(d));
                }
                Task::Interact => {
                    self.cursor[i] += 1;
                    return Ok(Action::Interact);
                }
                Task::Wait(n) => {
                    let left = self.wait_left[i].get_or_insert(n);
                    if *left == 0 {
                        self.wait_left[i] = None;
                        self.cursor[i] += 1;
                        continue;
                    }
                    *left -= 1;
                    return Ok(Action::Stay);
                }
                Task::WaitUntil(c) => {
                    if c.holds(state) {
                        self.cursor[i] += 1;
                        continue;
                    }
                    return Ok(Action::Stay);
                }
            }
        }
        Ok(Action::Stay)
    }
}

/// First move of a breadth-first shortest path, ties broken in
/// [`Direction::ALL`] order. `None` when already there or unreachable.
pub fn first_step(layout: &Layout, from: Pos, to: Pos, blocked: &[Pos]) -> Option<Direction> {
    if from == to || blocked.contains(&to) {
        return None;
    }
    let dist = layout.floor_distances(to, blocked);
    let here = dist[layout.cell_index(from)]?;
    Direction::ALL.into_iter().find(|&d| {
        let q = from.offset(d);
        layout.is_floor(q) && dist[layout.cell_index(q)] == Some(here - 1)
    })
}

/// Cells visited by [`first_step`] walking from `from` to `to` on the empty grid.
pub fn static_path(layout: &Layout, from: Pos, to: Pos) -> Vec<Pos> {
    let mut path = vec![from];
    let mut p = from;
    while let Some(d) = first_step(layout, p, to, &[]) {
        p = p.offset(d);
        path.push(p);
    }
    path
}

fn distance(layout: &Layout, from: Pos, to: Pos) -> Option<u32> {
    layout.floor_distances(to, &[])[layout.cell_index(from)]
}

struct Compiler<'a> {
    layout: &'a Layout,
    tasks: Vec<Task>,
    cur: Pos,
    visited: Vec<Pos>,
}

impl<'a> Compiler<'a> {
    fn nearest_access(&self, targets: &[Pos]) -> Result<(Pos, Direction), ExpertError> {
        targets
            .iter()
            .flat_map(|&t| self.layout.access_points(t))
            .filter_map(|(p, d)| distance(self.layout, self.cur, p).map(|dist| (dist, p, d)))
            .min_by_key(|(dist, p, _)| (*dist, self.layout.cell_index(*p)))
            .map(|(_, p, d)| (p, d))
            .ok_or(ExpertError::Unreachable)
    }

    fn visit(&mut self, targets: &[Pos]) -> Result<(), ExpertError> {
        let (p, d) = self.nearest_access(targets)?;
        self.visited.extend(static_path(self.layout, self.cur, p));
        self.tasks.push(Task::GoTo(p));
        self.tasks.push(Task::Face(d));
        self.cur = p;
        Ok(())
    }

    fn use_tile(&mut self, targets: &[Pos]) -> Result<(), ExpertError> {
        self.visit(targets)?;
        self.tasks.push(Task::Interact);
        Ok(())
    }
}

/// Compiles one cooking round from `state`. One chef (the worker) does all the
/// cooking while the other first walks to a parking cell off the worker's
/// routes; the worker waits for it before moving, so the two never meet
/// head-on in a corridor. Chef 0 works unless chef 1 gets a better parking cell.
pub fn compile_round(layout: &Layout, state: &GridState) -> Result<ScriptedPlan, ExpertError> {
    match (compile_for(layout, state, 0), compile_for(layout, state, 1)) {
        (Ok((a, ta)), Ok((b, tb))) => Ok(if tb < ta { b } else { a }),
        (Ok((a, _)), Err(_)) | (Err(_), Ok((a, _))) => Ok(a),
        (Err(e), Err(_)) => Err(e),
    }
}

fn compile_for(layout: &Layout, state: &GridState, worker: usize) -> Result<(ScriptedPlan, u8), ExpertError> {
    let idler = 1 - worker;
    let recipe = layout.recipe();
    let tiles = |k: TileKind| layout.cells_of(k).collect::<Vec<_>>();
    let (onions, plates, serving, cilantro) = (
        tiles(TileKind::OnionDispenser),
        tiles(TileKind::PlateDispenser),
        tiles(TileKind::ServingArea),
        tiles(TileKind::CilantroDispenser),
    );
    let mut c = Compiler {
        layout,
        tasks: Vec::new(),
        cur: state.chefs[worker].pos,
        visited: vec![state.chefs[worker].pos],
    };

    let near_oven = |k: usize| {
        layout
            .access_points(layout.ovens()[k])
            .iter()
            .filter_map(|(p, _)| distance(layout, c.cur, *p))
            .min()
            .unwrap_or(u32::MAX)
    };
    let oven_k = (0..layout.ovens().len())
        .max_by_key(|&k| {
            let o = state.ovens[k];
            (o.phase.code(), o.onions, std::cmp::Reverse(near_oven(k)), std::cmp::Reverse(k))
        })
        .ok_or(ExpertError::Unreachable)?;
    let oven = [layout.ovens()[oven_k]];
    let o = state.ovens[oven_k];

    let mut free_counters: Vec<usize> = (0..layout.counters().len())
        .filter(|&k| state.counter_item(k).is_nothing() && !layout.access_points(layout.counters()[k]).is_empty())
        .collect();
    let oven_access = c.nearest_access(&oven)?.0;
    let by_oven = |k: &usize| {
        let ap = layout.access_points(layout.counters()[*k]);
        let d = ap.iter().filter_map(|(p, _)| distance(layout, oven_access, *p)).min();
        (d.unwrap_or(u32::MAX), *k)
    };
    free_counters.sort_by_key(by_oven);
    let reserve_assembly = recipe == RecipeKind::Cilantro
        && !(0..layout.counters().len()).any(|k| state.counter_item(k) == Held::Cilantro);
    // Assembly takes the counter closest to the oven; stray items go to the
    // closest remaining counter from where the worker stands.
    let mut take_counter = |near: Option<Pos>| -> Result<Pos, ExpertError> {
        let idx = match near {
            None => (!free_counters.is_empty()).then_some(0),
            Some(from) => {
                let skip = usize::from(reserve_assembly && free_counters.len() > 1);
                (skip..free_counters.len()).min_by_key(|&i| {
                    let ap = layout.access_points(layout.counters()[free_counters[i]]);
                    (ap.iter().filter_map(|(p, _)| distance(layout, from, *p)).min().unwrap_or(u32::MAX), i)
                })
            }
        };
        let k = idx.map(|i| free_counters.remove(i)).ok_or(ExpertError::NoFreeCounter)?;
        Ok(layout.counters()[k])
    };

    let mut needed = match o.phase {
        OvenPhase::Empty | OvenPhase::Raw => 3 - o.onions,
        _ => 0,
    };
    let existing_cilantro = (0..layout.counters().len()).find(|&k| state.counter_item(k) == Held::Cilantro);
    let mut assembly: Option<Pos> = existing_cilantro.map(|k| layout.counters()[k]);

    c.tasks.push(Task::WaitUntil(Condition::Never));
    let barrier_slot = 0;

    let held = state.chefs[worker].held;
    let dish = recipe.finished_dish();
    let mut serve_now = false;
    match held {
        Held::Nothing => {}
        Held::Onion if needed > 0 => {
            c.use_tile(&oven)?;
            needed -= 1;
        }
        h if h == dish => serve_now = true,
        Held::Cilantro if recipe == RecipeKind::Cilantro && assembly.is_none() => {
            let counter = take_counter(None)?;
            c.use_tile(&[counter])?;
            assembly = Some(counter);
        }
        _ => {
            let counter = take_counter(Some(c.cur))?;
            c.use_tile(&[counter])?;
        }
    }

    if serve_now {
        c.use_tile(&serving)?;
    } else {
        if matches!(o.phase, OvenPhase::Empty | OvenPhase::Raw) {
            for _ in 0..needed {
                c.use_tile(&onions)?;
                c.use_tile(&oven)?;
            }
            c.use_tile(&oven)?;
        }
        if recipe == RecipeKind::Cilantro && assembly.is_none() {
            let counter = take_counter(None)?;
            c.use_tile(&cilantro)?;
            c.use_tile(&[counter])?;
            assembly = Some(counter);
        }
        c.use_tile(&plates)?;
        c.visit(&oven)?;
        c.tasks.push(Task::WaitUntil(Condition::OvenReady(oven_k)));
        c.tasks.push(Task::Interact);
        if let Some(a) = assembly {
            c.use_tile(&[a])?;
        }
        c.use_tile(&serving)?;
    }

    let (park, tier) = parking_cell(layout, state, idler, &c.visited)?;
    c.tasks[barrier_slot] = Task::WaitUntil(Condition::ChefAt(idler, park));
    let mut tasks = [c.tasks, vec![Task::GoTo(park), Task::WaitUntil(Condition::Never)]];
    if worker == 1 {
        tasks.swap(0, 1);
    }
    Ok((ScriptedPlan { tasks }, tier))
}

/// Floor cell for the idle chef that the worker never needs, with a rank:
/// 0 for cells that keep the floor connected, 1 for cut cells, 2 when the
/// idle chef would have to pass through the worker to get there.
fn parking_cell(layout: &Layout, state: &GridState, idler: usize, route: &[Pos]) -> Result<(Pos, u8), ExpertError> {
    let cuts = layout.articulation_cells();
    let me = state.chefs[idler].pos;
    let around = layout.floor_distances(me, &[state.chefs[1 - idler].pos]);
    let through = layout.floor_distances(me, &[]);
    let pick = |allow_cuts: bool, dist: &[Option<u32>]| {
        layout
            .floor_cells()
            .filter(|p| !route.contains(p) && (allow_cuts || !cuts.contains(p)))
            .filter_map(|p| dist[layout.cell_index(p)].map(|d| (d, layout.cell_index(p), p)))
            .min()
            .map(|(_, _, p)| p)
    };
    pick(false, &around)
        .map(|p| (p, 0))
        .or_else(|| pick(true, &around).map(|p| (p, 1)))
        .or_else(|| pick(true, &through).map(|p| (p, 2)))
        .ok_or(ExpertError::NoParkingCell)
}
