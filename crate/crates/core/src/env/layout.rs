//! Grid layouts and their flat-text format.
//!
//! ```text
//! name: bottleneck
//! horizon: 40
//! #############
//! #...K.#.....#
//! #S....D....G#
//! #.....#.....#
//! #############
//! ```
//!
//! `#` wall, `.` floor, `K` key, `D` locked door, `G` goal, `S` start.
//! Lines containing `:` are `key: value` settings; blank lines are skipped.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{GepoError, Result};

pub const DEFAULT_HORIZON: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Floor,
    Key,
    Door,
    Goal,
}

impl Cell {
    fn from_char(c: char) -> Option<(Cell, bool)> {
        Some(match c {
            '#' => (Cell::Wall, false),
            '.' => (Cell::Floor, false),
            'K' => (Cell::Key, false),
            'D' => (Cell::Door, false),
            'G' => (Cell::Goal, false),
            'S' => (Cell::Floor, true),
            _ => return None,
        })
    }

    fn to_char(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Floor => '.',
            Cell::Key => 'K',
            Cell::Door => 'D',
            Cell::Goal => 'G',
        }
    }
}

/// `(x, y)` with `x` the column and `y` the row.
pub type Pos = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub name: String,
    pub horizon: usize,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    start: Pos,
    /// Room id per cell; `None` for walls and doors.
    rooms: Vec<Option<usize>>,
    key_cells: Vec<Pos>,
    door_cells: Vec<Pos>,
}

impl Layout {
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("custom");
        let mut horizon = DEFAULT_HORIZON;
        let mut rows: Vec<&str> = Vec::new();
        for line in text.lines() {
            let line = line.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once(':') {
                match k.trim() {
                    "name" => name = v.trim().to_owned(),
                    "horizon" => {
                        horizon =
                            v.trim().parse().map_err(|_| GepoError::Config(format!("bad horizon `{}`", v.trim())))?
                    }
                    other => return Err(GepoError::Config(format!("unknown layout setting `{other}`"))),
                }
                continue;
            }
            rows.push(line.trim());
        }
        if rows.is_empty() {
            return Err(GepoError::Config("layout has no grid rows".into()));
        }
        if horizon == 0 {
            return Err(GepoError::Config("horizon must be positive".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        let mut start = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(GepoError::Config(format!("row {y} has a different width")));
            }
            for (x, ch) in row.chars().enumerate() {
                let (cell, is_start) =
                    Cell::from_char(ch).ok_or_else(|| GepoError::Config(format!("unknown layout character `{ch}`")))?;
                if is_start {
                    if start.is_some() {
                        return Err(GepoError::Config("more than one start cell".into()));
                    }
                    start = Some((x, y));
                }
                cells.push(cell);
            }
        }
        let start = start.ok_or_else(|| GepoError::Config("no start cell".into()))?;
        if !cells.contains(&Cell::Goal) {
            return Err(GepoError::Config("no goal cell".into()));
        }
        let mut layout = Layout {
            name,
            horizon,
            width,
            height,
            cells,
            start,
            rooms: Vec::new(),
            key_cells: Vec::new(),
            door_cells: Vec::new(),
        };
        layout.index();
        Ok(layout)
    }

    fn index(&mut self) {
        for y in 0..self.height {
            for x in 0..self.width {
                match self.cell((x, y)) {
                    Cell::Key => self.key_cells.push((x, y)),
                    Cell::Door => self.door_cells.push((x, y)),
                    _ => {}
                }
            }
        }
        // rooms: 4-connected open cells, with walls and doors as separators
        let mut rooms = vec![None; self.cells.len()];
        let mut next = 0;
        for i in 0..self.cells.len() {
            if rooms[i].is_some() || matches!(self.cells[i], Cell::Wall | Cell::Door) {
                continue;
            }
            let mut queue = VecDeque::from([i]);
            rooms[i] = Some(next);
            while let Some(j) = queue.pop_front() {
                let p = (j % self.width, j / self.width);
                for q in self.neighbours(p).into_iter().flatten() {
                    let k = q.1 * self.width + q.0;
                    if rooms[k].is_none() && !matches!(self.cells[k], Cell::Wall | Cell::Door) {
                        rooms[k] = Some(next);
                        queue.push_back(k);
                    }
                }
            }
            next += 1;
        }
        self.rooms = rooms;
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Pos {
        self.start
    }

    pub fn cell(&self, p: Pos) -> Cell {
        self.cells[p.1 * self.width + p.0]
    }

    /// Room id, counted from 1. `None` on doors and walls.
    pub fn room(&self, p: Pos) -> Option<usize> {
        self.rooms[p.1 * self.width + p.0].map(|r| r + 1)
    }

    pub fn key_cells(&self) -> &[Pos] {
        &self.key_cells
    }

    pub fn door_cells(&self) -> &[Pos] {
        &self.door_cells
    }

    /// Up, down, left, right; `None` off the grid.
    pub fn neighbours(&self, (x, y): Pos) -> [Option<Pos>; 4] {
        [
            y.checked_sub(1).map(|y| (x, y)),
            (y + 1 < self.height).then_some((x, y + 1)),
            x.checked_sub(1).map(|x| (x, y)),
            (x + 1 < self.width).then_some((x + 1, y)),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("name: {}\nhorizon: {}\n", self.name, self.horizon);
        for y in 0..self.height {
            for x in 0..self.width {
                let ch = if (x, y) == self.start { 'S' } else { self.cell((x, y)).to_char() };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

const CORRIDOR: &str = "\
name: corridor
###############
#...#...#.....#
#S...........G#
#...#...#.....#
###############
";

const BOTTLENECK: &str = "\
name: bottleneck
#############
#...K.#.....#
#S....D....G#
#.....#.....#
#############
";

const TWO_KEYS: &str = "\
name: two-keys
#############
#.K.#...#...#
#S..D...D..G#
#...#.K.#...#
#############
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutDescriptor {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub fn layout_catalog() -> Vec<LayoutDescriptor> {
    vec![
        LayoutDescriptor {
            name: "corridor",
            description: "chain of three rooms joined by open doorways, no keys",
            text: CORRIDOR,
        },
        LayoutDescriptor {
            name: "bottleneck",
            description: "two 5x3 rooms joined by a one-cell locked hallway; key in room 1",
            text: BOTTLENECK,
        },
        LayoutDescriptor {
            name: "two-keys",
            description: "three 3x3 rooms behind two sequential key-door bottlenecks",
            text: TWO_KEYS,
        },
    ]
}

/// Resolves a catalog name, or reads a layout file when `name` is a path.
pub fn load_layout(name: &str) -> Result<Layout> {
    if let Some(d) = layout_catalog().into_iter().find(|d| d.name == name) {
        return Layout::parse(d.text);
    }
    let path = std::path::Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| GepoError::io(path, e))?;
        return Layout::parse(&text);
    }
    Err(GepoError::Config(format!("unknown layout `{name}`")))
}
