use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::fmt;

use super::GridError;

/// Cell coordinate. `x` grows to the right, `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileKind {
    Floor,
    Wall,
    OnionDispenser,
    PlateDispenser,
    Oven,
    ServingArea,
    CilantroDispenser,
}

impl TileKind {
    pub fn from_char(c: char) -> Option<TileKind> {
        Some(match c {
            ' ' | '1' | '2' => TileKind::Floor,
            'X' => TileKind::Wall,
            'O' => TileKind::OnionDispenser,
            'P' => TileKind::PlateDispenser,
            'V' => TileKind::Oven,
            'S' => TileKind::ServingArea,
            'C' => TileKind::CilantroDispenser,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            TileKind::Floor => ' ',
            TileKind::Wall => 'X',
            TileKind::OnionDispenser => 'O',
            TileKind::PlateDispenser => 'P',
            TileKind::Oven => 'V',
            TileKind::ServingArea => 'S',
            TileKind::CilantroDispenser => 'C',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeKind {
    Plain,
    Cilantro,
}

impl RecipeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecipeKind::Plain => "plain",
            RecipeKind::Cilantro => "cilantro",
        }
    }

    /// Item a chef must hold at the serving area for a delivery to count.
    pub fn finished_dish(self) -> super::Held {
        match self {
            RecipeKind::Plain => super::Held::SoupPlate,
            RecipeKind::Cilantro => super::Held::CilantroSoupPlate,
        }
    }
}

/// Static kitchen description: tiles, chef start cells and the recipe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    width: usize,
    height: usize,
    tiles: Vec<TileKind>,
    chef_starts: [(Pos, Direction); 2],
    recipe: RecipeKind,
    ovens: Vec<Pos>,
    counters: Vec<Pos>,
    oven_slot: Vec<Option<u16>>,
    counter_slot: Vec<Option<u16>>,
}

const START_FACING: Direction = Direction::Up;

impl Layout {
    pub fn load(path: &std::path::Path) -> Result<Layout, GridError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the text format: a `recipe: plain|cilantro` header followed by
    /// one grid row per line.
    pub fn parse(text: &str) -> Result<Layout, GridError> {
        let mut lines = text.lines().skip_while(|l| l.trim().is_empty());
        let header = lines.next().ok_or(GridError::MissingRecipeHeader)?;
        let recipe = match header.trim().strip_prefix("recipe:").map(str::trim) {
            Some("plain") => RecipeKind::Plain,
            Some("cilantro") => RecipeKind::Cilantro,
            Some(other) => return Err(GridError::UnknownRecipe(other.to_string())),
            None => return Err(GridError::MissingRecipeHeader),
        };

        let rows: Vec<&str> = lines.collect();
        let rows: Vec<&str> = {
            let end = rows.iter().rposition(|r| !r.trim().is_empty()).map_or(0, |i| i + 1);
            rows[..end].to_vec()
        };
        if rows.is_empty() {
            return Err(GridError::EmptyGrid);
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut tiles = Vec::with_capacity(width * height);
        let mut starts: [Option<Pos>; 2] = [None, None];
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(GridError::RaggedGrid { row: y });
            }
            for (x, ch) in row.chars().enumerate() {
                let kind = TileKind::from_char(ch).ok_or(GridError::UnknownCharacter { ch, row: y, col: x })?;
                if let Some(d) = ch.to_digit(10) {
                    let slot = &mut starts[d as usize - 1];
                    if slot.is_some() {
                        return Err(GridError::DuplicateChefStart(d as u8));
                    }
                    *slot = Some(Pos::new(x as i32, y as i32));
                }
                tiles.push(kind);
            }
        }
        let s0 = starts[0].ok_or(GridError::MissingChefStart(1))?;
        let s1 = starts[1].ok_or(GridError::MissingChefStart(2))?;
        Layout::new(width, height, tiles, [(s0, START_FACING), (s1, START_FACING)], recipe)
    }

    pub fn new(
        width: usize,
        height: usize,
        tiles: Vec<TileKind>,
        chef_starts: [(Pos, Direction); 2],
        recipe: RecipeKind,
    ) -> Result<Layout, GridError> {
        if width == 0 || height == 0 || tiles.len() != width * height {
            return Err(GridError::EmptyGrid);
        }
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
                if border && tiles[y * width + x] == TileKind::Floor {
                    return Err(GridError::BoundaryFloor { x, y });
                }
            }
        }
        let mut required = vec![
            TileKind::OnionDispenser,
            TileKind::PlateDispenser,
            TileKind::Oven,
            TileKind::ServingArea,
        ];
        let has_cilantro = tiles.contains(&TileKind::CilantroDispenser);
        match recipe {
            RecipeKind::Cilantro => required.push(TileKind::CilantroDispenser),
            RecipeKind::Plain if has_cilantro => {
                return Err(GridError::UnexpectedTile(TileKind::CilantroDispenser))
            }
            RecipeKind::Plain => {}
        }
        if let Some(missing) = required.into_iter().find(|k| !tiles.contains(k)) {
            return Err(GridError::MissingRequiredTile(missing));
        }

        let mut ovens = Vec::new();
        let mut counters = Vec::new();
        let mut oven_slot = vec![None; tiles.len()];
        let mut counter_slot = vec![None; tiles.len()];
        for (i, t) in tiles.iter().enumerate() {
            let p = Pos::new((i % width) as i32, (i / width) as i32);
            match t {
                TileKind::Oven => {
                    oven_slot[i] = Some(ovens.len() as u16);
                    ovens.push(p);
                }
                TileKind::Wall => {
                    counter_slot[i] = Some(counters.len() as u16);
                    counters.push(p);
                }
                _ => {}
            }
        }
        let layout = Layout {
            width,
            height,
            tiles,
            chef_starts,
            recipe,
            ovens,
            counters,
            oven_slot,
            counter_slot,
        };
        for (i, (p, _)) in chef_starts.iter().enumerate() {
            if !layout.is_floor(*p) {
                return Err(GridError::MissingChefStart(i as u8 + 1));
            }
        }
        if chef_starts[0].0 == chef_starts[1].0 {
            return Err(GridError::DuplicateChefStart(2));
        }
        Ok(layout)
    }

    /// Inverse of [`Layout::parse`].
    pub fn render(&self) -> String {
        let mut out = format!("recipe: {}\n", self.recipe.as_str());
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Pos::new(x as i32, y as i32);
                let ch = if p == self.chef_starts[0].0 {
                    '1'
                } else if p == self.chef_starts[1].0 {
                    '2'
                } else {
                    self.tile(p).to_char()
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the rendered layout.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn recipe(&self) -> RecipeKind {
        self.recipe
    }

    pub fn chef_starts(&self) -> [(Pos, Direction); 2] {
        self.chef_starts
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub fn cell_index(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    /// Tile at `p`; anything outside the grid reads as wall.
    pub fn tile(&self, p: Pos) -> TileKind {
        if self.in_bounds(p) {
            self.tiles[self.cell_index(p)]
        } else {
            TileKind::Wall
        }
    }

    pub fn is_floor(&self, p: Pos) -> bool {
        self.tile(p) == TileKind::Floor
    }

    pub fn ovens(&self) -> &[Pos] {
        &self.ovens
    }

    /// Wall cells; every wall doubles as a counter that can hold one item.
    pub fn counters(&self) -> &[Pos] {
        &self.counters
    }

    pub fn oven_index(&self, p: Pos) -> Option<usize> {
        if self.in_bounds(p) {
            self.oven_slot[self.cell_index(p)].map(usize::from)
        } else {
            None
        }
    }

    pub fn counter_index(&self, p: Pos) -> Option<usize> {
        if self.in_bounds(p) {
            self.counter_slot[self.cell_index(p)].map(usize::from)
        } else {
            None
        }
    }

    pub fn floor_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .map(move |x| Pos::new(x as i32, y as i32))
                .filter(move |p| self.is_floor(*p))
        })
    }

    pub fn cells_of(&self, kind: TileKind) -> impl Iterator<Item = Pos> + '_ {
        self.tiles.iter().enumerate().filter(move |(_, t)| **t == kind).map(move |(i, _)| {
            Pos::new((i % self.width) as i32, (i / self.width) as i32)
        })
    }

    /// Floor cells from which a chef can face `target`, with the facing needed.
    pub fn access_points(&self, target: Pos) -> Vec<(Pos, Direction)> {
        Direction::ALL
            .iter()
            .filter_map(|&d| {
                let (dx, dy) = d.delta();
                let stand = Pos::new(target.x - dx, target.y - dy);
                self.is_floor(stand).then_some((stand, d))
            })
            .collect()
    }

    /// Breadth-first distances over floor cells from `from`, treating the
    /// cells in `blocked` as impassable. Unreachable cells map to `None`.
    pub fn floor_distances(&self, from: Pos, blocked: &[Pos]) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.tiles.len()];
        if !self.is_floor(from) {
            return dist;
        }
        dist[self.cell_index(from)] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.cell_index(p)].unwrap_or(0);
            for dir in Direction::ALL {
                let q = p.offset(dir);
                if self.is_floor(q) && !blocked.contains(&q) && dist[self.cell_index(q)].is_none() {
                    dist[self.cell_index(q)] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    /// Floor cells whose removal disconnects the floor graph.
    pub fn articulation_cells(&self) -> Vec<Pos> {
        let floor: Vec<Pos> = self.floor_cells().collect();
        let reachable = |blocked: &[Pos], start: Pos| {
            self.floor_distances(start, blocked).iter().filter(|d| d.is_some()).count()
        };
        floor
            .iter()
            .copied()
            .filter(|&cut| {
                let Some(&start) = floor.iter().find(|p| **p != cut) else {
                    return false;
                };
                reachable(&[cut], start) < floor.len() - 1
            })
            .collect()
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
