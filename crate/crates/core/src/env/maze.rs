use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::FiniteMdp;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutName {
    #[serde(rename = "Empty-8x8")]
    Empty8x8,
    #[serde(rename = "Empty-16x16")]
    Empty16x16,
    #[serde(rename = "SimpleCrossingS9N1")]
    SimpleCrossingS9N1,
    #[serde(rename = "SimpleCrossingS9N2")]
    SimpleCrossingS9N2,
    #[serde(rename = "SimpleCrossingS9N3")]
    SimpleCrossingS9N3,
    #[serde(rename = "SimpleCrossingS11N5")]
    SimpleCrossingS11N5,
    #[serde(rename = "FourRooms")]
    FourRooms,
}

impl LayoutName {
    pub const ALL: [LayoutName; 7] = [
        Self::Empty8x8,
        Self::Empty16x16,
        Self::SimpleCrossingS9N1,
        Self::SimpleCrossingS9N2,
        Self::SimpleCrossingS9N3,
        Self::SimpleCrossingS11N5,
        Self::FourRooms,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Empty8x8 => "Empty-8x8",
            Self::Empty16x16 => "Empty-16x16",
            Self::SimpleCrossingS9N1 => "SimpleCrossingS9N1",
            Self::SimpleCrossingS9N2 => "SimpleCrossingS9N2",
            Self::SimpleCrossingS9N3 => "SimpleCrossingS9N3",
            Self::SimpleCrossingS11N5 => "SimpleCrossingS11N5",
            Self::FourRooms => "FourRooms",
        }
    }
}

impl fmt::Display for LayoutName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown maze layout `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// `−1` per non-idle action, goal bonus on arrival.
    Dense,
    /// Goal bonus only.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMazeConfig {
    pub layout: LayoutName,
    pub reward: RewardMode,
    #[serde(default)]
    pub layout_seed: u64,
    #[serde(default = "default_maze_discount")]
    pub discount: f64,
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
}

fn default_maze_discount() -> f64 {
    0.98
}

fn default_goal_reward() -> f64 {
    1000.0
}

impl GridMazeConfig {
    pub fn new(layout: LayoutName, reward: RewardMode) -> Self {
        Self {
            layout,
            reward,
            layout_seed: 0,
            discount: default_maze_discount(),
            goal_reward: default_goal_reward(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MazeAction {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Idle = 3,
}

impl MazeAction {
    pub const ALL: [MazeAction; 4] = [Self::TurnLeft, Self::TurnRight, Self::Forward, Self::Idle];
}

/// Wall/floor grid with a start cell (facing east) and a goal cell.
/// Orientation 0 = east, 1 = south, 2 = west, 3 = north; `y` grows downward.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub width: usize,
    pub height: usize,
    walls: Vec<bool>,
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

impl Layout {
    fn bordered(width: usize, height: usize) -> Self {
        let mut walls = vec![false; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                    walls[y * width + x] = true;
                }
            }
        }
        Self {
            width,
            height,
            walls,
            start: (1, 1),
            goal: (width - 2, height - 2),
        }
    }

    pub fn generate(name: LayoutName, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, name as u64);
        let layout = match name {
            LayoutName::Empty8x8 => Self::bordered(8, 8),
            LayoutName::Empty16x16 => Self::bordered(16, 16),
            LayoutName::SimpleCrossingS9N1 => Self::crossing(9, 1, &mut rng),
            LayoutName::SimpleCrossingS9N2 => Self::crossing(9, 2, &mut rng),
            LayoutName::SimpleCrossingS9N3 => Self::crossing(9, 3, &mut rng),
            LayoutName::SimpleCrossingS11N5 => Self::crossing(11, 5, &mut rng),
            LayoutName::FourRooms => Self::four_rooms(19, &mut rng),
        };
        if !layout.connected() {
            return Err(Error::Internal(format!("layout {name} has no start-goal path")));
        }
        Ok(layout)
    }

    /// `crossings` full-length walls on even rows/columns, opened once each
    /// along a monotone room-to-room path from the top-left to the bottom-right.
    fn crossing(size: usize, crossings: usize, rng: &mut rng::Rng) -> Self {
        let mut layout = Self::bordered(size, size);
        let mut candidates: Vec<(bool, usize)> = (2..size - 2)
            .step_by(2)
            .flat_map(|k| [(true, k), (false, k)])
            .collect();
        candidates.shuffle(rng);
        candidates.truncate(crossings);
        // `true`: vertical wall at column k; `false`: horizontal wall at row k
        let mut columns: Vec<usize> = candidates.iter().filter(|c| c.0).map(|c| c.1).collect();
        let mut rows: Vec<usize> = candidates.iter().filter(|c| !c.0).map(|c| c.1).collect();
        columns.sort_unstable();
        rows.sort_unstable();
        for &cx in &columns {
            for y in 1..size - 1 {
                layout.set_wall(cx, y, true);
            }
        }
        for &ry in &rows {
            for x in 1..size - 1 {
                layout.set_wall(x, ry, true);
            }
        }
        let mut path: Vec<bool> = std::iter::repeat(true)
            .take(columns.len())
            .chain(std::iter::repeat(false).take(rows.len()))
            .collect();
        path.shuffle(rng);
        let limits_x: Vec<usize> = std::iter::once(0).chain(columns.iter().copied()).chain([size - 1]).collect();
        let limits_y: Vec<usize> = std::iter::once(0).chain(rows.iter().copied()).chain([size - 1]).collect();
        let (mut room_x, mut room_y) = (0, 0);
        for crosses_column in path {
            if crosses_column {
                let x = limits_x[room_x + 1];
                let y = rng.gen_range(limits_y[room_y] + 1..limits_y[room_y + 1]);
                layout.set_wall(x, y, false);
                room_x += 1;
            } else {
                let x = rng.gen_range(limits_x[room_x] + 1..limits_x[room_x + 1]);
                let y = limits_y[room_y + 1];
                layout.set_wall(x, y, false);
                room_y += 1;
            }
        }
        layout
    }

    /// Four rooms split by a central cross of walls with one door per arm.
    fn four_rooms(size: usize, rng: &mut rng::Rng) -> Self {
        let mut layout = Self::bordered(size, size);
        let mid = size / 2;
        for k in 1..size - 1 {
            layout.set_wall(mid, k, true);
            layout.set_wall(k, mid, true);
        }
        let mut door = |lo: usize, hi: usize| rng.gen_range(lo..hi);
        let (up, down) = (door(1, mid), door(mid + 1, size - 1));
        let (left, right) = (door(1, mid), door(mid + 1, size - 1));
        layout.set_wall(mid, up, false);
        layout.set_wall(mid, down, false);
        layout.set_wall(left, mid, false);
        layout.set_wall(right, mid, false);
        layout
    }

    fn set_wall(&mut self, x: usize, y: usize, wall: bool) {
        self.walls[y * self.width + x] = wall;
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.walls[y * self.width + x]
    }

    pub fn floor_cells(&self) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| !self.is_wall(x, y))
            .collect()
    }

    /// Breadth-first search from start to goal over floor cells.
    pub fn connected(&self) -> bool {
        let mut seen = vec![false; self.walls.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start.1 * self.width + self.start.0] = true;
        while let Some((x, y)) = queue.pop_front() {
            if (x, y) == self.goal {
                return true;
            }
            for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                let idx = ny * self.width + nx;
                if !self.walls[idx] && !seen[idx] {
                    seen[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        false
    }

    /// ASCII rendering: `#` wall, `.` floor, `S` start, `G` goal.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if (x, y) == self.start {
                    'S'
                } else if (x, y) == self.goal {
                    'G'
                } else if self.is_wall(x, y) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

/// A grid maze as a finite MDP over poses `(x, y, orientation)`.
///
/// Transitions are deterministic, so the goal bonus is attached to the action
/// that enters the goal cell; goal poses are absorbing with zero reward.
#[derive(Clone, Debug)]
pub struct GridMaze {
    config: GridMazeConfig,
    layout: Layout,
    poses: Vec<(usize, usize, usize)>,
    mdp: FiniteMdp,
}

const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

pub fn make_grid_maze(config: GridMazeConfig) -> Result<GridMaze> {
    let layout = Layout::generate(config.layout, config.layout_seed)?;
    let cells = layout.floor_cells();
    let mut index = vec![usize::MAX; layout.width * layout.height * 4];
    let mut poses = Vec::with_capacity(cells.len() * 4);
    for &(x, y) in &cells {
        for dir in 0..4 {
            index[(y * layout.width + x) * 4 + dir] = poses.len();
            poses.push((x, y, dir));
        }
    }
    let n_states = poses.len();
    let mut transitions = Vec::with_capacity(n_states * 4);
    let mut rewards = Vec::with_capacity(n_states * 4);
    for &(x, y, dir) in &poses {
        for action in MazeAction::ALL {
            if (x, y) == layout.goal {
                transitions.push(vec![(index[(y * layout.width + x) * 4 + dir], 1.0)]);
                rewards.push(0.0);
                continue;
            }
            let (nx, ny, ndir) = match action {
                MazeAction::TurnLeft => (x, y, (dir + 3) % 4),
                MazeAction::TurnRight => (x, y, (dir + 1) % 4),
                MazeAction::Idle => (x, y, dir),
                MazeAction::Forward => {
                    let (dx, dy) = DIRECTIONS[dir];
                    let (fx, fy) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
                    if layout.is_wall(fx, fy) {
                        (x, y, dir)
                    } else {
                        (fx, fy, dir)
                    }
                }
            };
            transitions.push(vec![(index[(ny * layout.width + nx) * 4 + ndir], 1.0)]);
            let reward = if (nx, ny) == layout.goal {
                config.goal_reward
            } else if config.reward == RewardMode::Dense && action != MazeAction::Idle {
                -1.0
            } else {
                0.0
            };
            rewards.push(reward);
        }
    }
    let mut initial = vec![0.0; n_states];
    initial[index[(layout.start.1 * layout.width + layout.start.0) * 4]] = 1.0;
    let features = poses.iter().map(|&(x, y, _)| [x as f64, y as f64]).collect();
    let mdp = FiniteMdp::new(n_states, 4, initial, transitions, rewards, config.discount)?
        .with_features(features, 2)?;
    Ok(GridMaze {
        config,
        layout,
        poses,
        mdp,
    })
}

impl GridMaze {
    pub fn config(&self) -> &GridMazeConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    /// `(x, y, orientation)` of a state index.
    pub fn pose(&self, state: usize) -> (usize, usize, usize) {
        self.poses[state]
    }

    /// Policy-network inputs: `x / (width − 1)`, `y / (height − 1)` and a
    /// one-hot orientation, one row per state.
    pub fn network_inputs(&self) -> Vec<Vec<f64>> {
        let (w, h) = ((self.layout.width - 1) as f64, (self.layout.height - 1) as f64);
        self.poses
            .iter()
            .map(|&(x, y, dir)| {
                let mut row = vec![x as f64 / w, y as f64 / h, 0.0, 0.0, 0.0, 0.0];
                row[2 + dir] = 1.0;
                row
            })
            .collect()
    }
}
