//! Test-bed environments: the corridor, the hill-car valley and grid mazes.

mod corridor;
mod hill;
mod maze;

pub use corridor::{make_corridor, Corridor, CorridorConfig};
pub use hill::{make_hill, Hill, HillConfig, HillState};
pub use maze::{
    make_grid_maze, GridMaze, GridMazeConfig, Layout, LayoutName, MazeAction, RewardMode,
};
