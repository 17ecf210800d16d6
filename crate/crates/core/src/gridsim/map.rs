//! ASCII map files.
//!
//! ```text
//! world: circuit2          <- optional directives, `key: value`
//! heading: E
//! #########
//! #S..B..G#
//! #########
//! ```
//!
//! `#` occupied, `.` free, `G` goal (free), `S` spawn (free, exactly one),
//! `B` optional obstacle cell (free unless the obstacle is sampled present).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{Heading, Pose};

/// Occupancy label of a free cell.
pub const FREE: i8 = 0;
/// Occupancy label of an occupied cell.
pub const OCCUPIED: i8 = -1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("map has no goal cell")]
    NoGoal,
    #[error("map has no spawn cell")]
    NoSpawn,
    #[error("unknown world {0:?}, expected one of circuit, circuit2, office")]
    UnknownWorld(String),
}

/// Benchmark world identity; selects the reward schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorldId {
    Circuit,
    Circuit2,
    Office,
}

impl WorldId {
    pub const ALL: [WorldId; 3] = [WorldId::Circuit, WorldId::Circuit2, WorldId::Office];

    pub fn name(self) -> &'static str {
        match self {
            WorldId::Circuit => "circuit",
            WorldId::Circuit2 => "circuit2",
            WorldId::Office => "office",
        }
    }

    pub fn goal_bonus(self) -> f64 {
        match self {
            WorldId::Circuit | WorldId::Office => 500.0,
            WorldId::Circuit2 => 1000.0,
        }
    }

    /// Bundled map text for this world.
    pub fn map_text(self) -> &'static str {
        match self {
            WorldId::Circuit => include_str!("../../maps/circuit.txt"),
            WorldId::Circuit2 => include_str!("../../maps/circuit2.txt"),
            WorldId::Office => include_str!("../../maps/office.txt"),
        }
    }

    pub fn load(self) -> GridMap {
        GridMap::parse(self.map_text()).expect("bundled maps are valid")
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorldId {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "circuit" => Ok(WorldId::Circuit),
            "circuit2" => Ok(WorldId::Circuit2),
            "office" => Ok(WorldId::Office),
            other => Err(MapError::UnknownWorld(other.to_string())),
        }
    }
}

/// Hidden occupancy labeling plus goal region, spawn pose and the optional
/// obstacle. A map returned by [`super::reset`] is an *instance*: its
/// optional-obstacle cells are occupied iff [`GridMap::obstacle_present`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    occupancy: Vec<i8>,
    goal: Vec<bool>,
    spawn: Pose,
    optional_obstacle: Vec<usize>,
    obstacle_present: bool,
    world: WorldId,
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut world = WorldId::Circuit;
        let mut heading = Heading::E;
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if rows.is_empty() {
                if let Some((key, value)) = line.split_once(':') {
                    match key.trim() {
                        "world" => world = value.parse()?,
                        "heading" => {
                            heading = value.trim().parse().map_err(|_| MapError::Syntax {
                                line: line_no,
                                column: key.len() + 2,
                                msg: format!("bad heading {:?}", value.trim()),
                            })?
                        }
                        other => {
                            return Err(MapError::Syntax {
                                line: line_no,
                                column: 1,
                                msg: format!("unknown directive {other:?}"),
                            })
                        }
                    }
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
            }
            rows.push((line_no, line));
        }
        while rows.last().is_some_and(|(_, l)| l.trim().is_empty()) {
            rows.pop();
        }
        let Some(&(first_line, first)) = rows.first() else {
            return Err(MapError::NoSpawn);
        };
        let width = first.chars().count();
        let height = rows.len();
        let mut occupancy = Vec::with_capacity(width * height);
        let mut goal = vec![false; width * height];
        let mut spawn: Option<Pose> = None;
        let mut optional_obstacle = Vec::new();
        for (y, &(line_no, line)) in rows.iter().enumerate() {
            let n = line.chars().count();
            if n != width {
                return Err(MapError::Syntax {
                    line: line_no,
                    column: n.min(width) + 1,
                    msg: format!(
                        "row has {n} cells, expected {width} (map starts at line {first_line})"
                    ),
                });
            }
            for (x, ch) in line.chars().enumerate() {
                let idx = y * width + x;
                let syntax = |msg: String| MapError::Syntax {
                    line: line_no,
                    column: x + 1,
                    msg,
                };
                let label = match ch {
                    '#' => OCCUPIED,
                    '.' => FREE,
                    'G' => {
                        goal[idx] = true;
                        FREE
                    }
                    'B' => {
                        optional_obstacle.push(idx);
                        FREE
                    }
                    'S' => {
                        if spawn.is_some() {
                            return Err(syntax("second spawn cell".into()));
                        }
                        spawn = Some(Pose { x, y, heading });
                        FREE
                    }
                    other => return Err(syntax(format!("unexpected character {other:?}"))),
                };
                let boundary = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
                if boundary && label != OCCUPIED {
                    return Err(syntax(format!("boundary cell {ch:?} must be occupied")));
                }
                occupancy.push(label);
            }
        }
        let spawn = spawn.ok_or(MapError::NoSpawn)?;
        if !goal.iter().any(|&g| g) {
            return Err(MapError::NoGoal);
        }
        Ok(Self {
            width,
            height,
            occupancy,
            goal,
            spawn,
            optional_obstacle,
            obstacle_present: false,
            world,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of cells `n`.
    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Label of a cell, `0` free or `-1` occupied.
    pub fn label(&self, x: usize, y: usize) -> i8 {
        self.occupancy[self.index(x, y)]
    }

    pub fn labels(&self) -> &[i8] {
        &self.occupancy
    }

    pub fn is_free(&self, x: usize, y: usize) -> bool {
        self.label(x, y) == FREE
    }

    pub fn is_goal(&self, x: usize, y: usize) -> bool {
        self.goal[self.index(x, y)]
    }

    pub fn goal_cells(&self) -> Vec<usize> {
        (0..self.goal.len()).filter(|&i| self.goal[i]).collect()
    }

    pub fn spawn(&self) -> Pose {
        self.spawn
    }

    pub fn optional_obstacle(&self) -> &[usize] {
        &self.optional_obstacle
    }

    pub fn obstacle_present(&self) -> bool {
        self.obstacle_present
    }

    pub fn world(&self) -> WorldId {
        self.world
    }

    pub fn set_world(&mut self, world: WorldId) {
        self.world = world;
    }

    /// Copy of this map with the optional obstacle set present or absent.
    pub fn with_obstacle(&self, present: bool) -> GridMap {
        let mut inst = self.clone();
        let label = if present { OCCUPIED } else { FREE };
        for &idx in &self.optional_obstacle {
            inst.occupancy[idx] = label;
        }
        inst.obstacle_present = present && !self.optional_obstacle.is_empty();
        inst
    }

    pub fn pose_is_valid(&self, pose: Pose) -> bool {
        pose.x < self.width && pose.y < self.height && self.is_free(pose.x, pose.y)
    }

    /// Renders the map back to text, marking `pose` with its heading glyph.
    pub fn render(&self, pose: Option<Pose>) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let idx = self.index(x, y);
                let ch = match pose {
                    Some(p) if p.x == x && p.y == y => p.heading.glyph(),
                    _ if self.optional_obstacle.contains(&idx) => {
                        if self.occupancy[idx] == OCCUPIED {
                            'B'
                        } else {
                            'b'
                        }
                    }
                    _ if self.goal[idx] => 'G',
                    _ if self.occupancy[idx] == OCCUPIED => '#',
                    _ => '.',
                };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }
}
