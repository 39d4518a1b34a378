//! Multi-step improvement frequency in the sparse 16x16 maze at a fresh
//! network: how often five Adam steps along each objective's direction raise
//! that objective by more than the threshold.
//!
//! ```text
//! cargo run --release --example improvement_frequency -- 20
//! ```

use std::sync::Arc;

use pgx::analysis::{multi_step_improvement_frequency, FrequencySettings};
use pgx::env::{make_grid_maze, GridMazeConfig, LayoutName, RewardMode};
use pgx::learn::estimate_direction;
use pgx::mdp::exact_return;
use pgx::policy::CategoricalMlpPolicy;
use pgx::rng;
use pgx::shaping::{evaluate_shaped_objective, DensitySpec, IntrinsicBonus, ShapedObjective};

fn main() -> pgx::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let maze = make_grid_maze(GridMazeConfig::new(LayoutName::Empty16x16, RewardMode::Sparse))?;
    let seed = 1;
    let policy = CategoricalMlpPolicy::new(
        Arc::new(maze.network_inputs()),
        maze.mdp().n_actions(),
        rng::init_seed(seed),
    );
    let ls = ShapedObjective::new(
        maze.mdp(),
        vec![IntrinsicBonus::state_entropy(0.25, DensitySpec::Gmm { components: 10 })],
        32,
        100,
    )?;
    let j = ls.unshaped();
    let settings = FrequencySettings::new(trials, seed);

    let freq_j = multi_step_improvement_frequency::<usize, _, _, _>(
        &policy,
        settings,
        |p, s| Ok(estimate_direction(&j, p, s)?.0.direction),
        |p| exact_return(maze.mdp(), p),
    )?;
    let eval = ShapedObjective {
        histories: 64,
        ..ls.clone()
    };
    let eval_seed = rng::evaluation_seed(seed);
    let freq_ls = multi_step_improvement_frequency::<usize, _, _, _>(
        &policy,
        settings,
        |p, s| Ok(estimate_direction(&ls, p, s)?.0.direction),
        |p| Ok(evaluate_shaped_objective(&eval, p, eval_seed)?.l().mean),
    )?;
    println!("J : {}/{} trials improved by > {}", freq_j.successes, freq_j.trials, settings.threshold);
    println!("Ls: {}/{} trials improved by > {}", freq_ls.successes, freq_ls.trials, settings.threshold);
    Ok(())
}
