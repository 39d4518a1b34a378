//! Adam on REINFORCE directions for a network policy in the dense 8x8 maze.
//!
//! ```text
//! cargo run --release --example maze_training -- 300
//! ```

use std::sync::Arc;

use pgx::env::{make_grid_maze, GridMazeConfig, LayoutName, RewardMode};
use pgx::learn::{train_with_observer, OptimizerState, TrainSettings};
use pgx::mdp::exact_return;
use pgx::policy::CategoricalMlpPolicy;
use pgx::rng;
use pgx::shaping::{DensitySpec, IntrinsicBonus, ShapedObjective};

fn main() -> pgx::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300);
    let maze = make_grid_maze(GridMazeConfig::new(LayoutName::Empty8x8, RewardMode::Dense))?;
    print!("{}", maze.layout().render());
    let inputs = Arc::new(maze.network_inputs());
    let seed = 1;

    let bonuses = vec![IntrinsicBonus::state_entropy(0.25, DensitySpec::Gmm { components: 10 })];
    for (name, obj) in [
        ("J", ShapedObjective::new(maze.mdp(), vec![], 32, 100)?),
        ("Ls", ShapedObjective::new(maze.mdp(), bonuses.clone(), 32, 100)?),
    ] {
        let policy = CategoricalMlpPolicy::new(Arc::clone(&inputs), maze.mdp().n_actions(), rng::init_seed(seed));
        let settings = TrainSettings {
            iterations,
            seed,
            wall_clock: false,
        };
        let every = (iterations / 5).max(1);
        let outcome = train_with_observer(&obj, policy, OptimizerState::adam(5e-4), settings, |i, p| {
            if i % every == 0 {
                println!("{name} iteration {i:>5}: exact J {:8.2}", exact_return(maze.mdp(), p)?);
            }
            Ok(())
        })?;
        println!(
            "{name} final exact J {:.2}{}",
            exact_return(maze.mdp(), &outcome.policy)?,
            outcome.halted.map(|h| format!(" (halted: {h})")).unwrap_or_default()
        );
    }
    Ok(())
}
