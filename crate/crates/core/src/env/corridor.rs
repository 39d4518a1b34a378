use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::FiniteMdp;
use crate::policy::bernoulli::{LEFT, RIGHT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorConfig {
    pub tiles: usize,
    pub idle_probability: f64,
    pub target_reward: f64,
    pub discount: f64,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            tiles: 15,
            idle_probability: 0.7,
            target_reward: 100.0,
            discount: 0.99,
        }
    }
}

/// Horizontal corridor of tiles `1..=S`; the agent starts on tile 1 and the
/// target tile `S` is absorbing.
///
/// The target reward is paid once, on the first step spent on tile `S`. To keep
/// this Markov the chain has `S + 1` states: index `i < S` is tile `i + 1`
/// (index `S − 1` being the paying arrival on the target), and index `S` is the
/// post-arrival sink, still located on tile `S`.
#[derive(Clone, Debug)]
pub struct Corridor {
    config: CorridorConfig,
    mdp: FiniteMdp,
}

pub fn make_corridor(config: CorridorConfig) -> Result<Corridor> {
    let tiles = config.tiles;
    if tiles < 2 {
        return Err(invalid("corridor needs at least 2 tiles"));
    }
    if !(0.0..=1.0).contains(&config.idle_probability) {
        return Err(invalid("idle probability must lie in [0, 1]"));
    }
    let n_states = tiles + 1;
    let arrival = tiles - 1;
    let sink = tiles;
    let p = config.idle_probability;
    let mut transitions = Vec::with_capacity(n_states * 2);
    let mut rewards = Vec::with_capacity(n_states * 2);
    for s in 0..n_states {
        for action in [LEFT, RIGHT] {
            if s == arrival || s == sink {
                transitions.push(vec![(sink, 1.0)]);
                rewards.push(if s == arrival { config.target_reward } else { 0.0 });
                continue;
            }
            let moved = if action == RIGHT {
                (s + 1).min(tiles - 1)
            } else {
                s.saturating_sub(1)
            };
            // the idle entry comes first so a shared uniform draw couples policies
            transitions.push(vec![(s, p), (moved, 1.0 - p)]);
            rewards.push(0.0);
        }
    }
    let mut initial = vec![0.0; n_states];
    initial[0] = 1.0;
    let features = (0..n_states).map(|s| [(s.min(arrival) + 1) as f64, 0.0]).collect();
    let mdp = FiniteMdp::new(n_states, 2, initial, transitions, rewards, config.discount)?
        .with_features(features, 1)?;
    Ok(Corridor { config, mdp })
}

impl Corridor {
    pub fn config(&self) -> &CorridorConfig {
        &self.config
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    pub fn tiles(&self) -> usize {
        self.config.tiles
    }

    /// Chain state of a tile when the target reward has not been paid yet.
    pub fn state_of_tile(&self, tile: usize) -> usize {
        assert!((1..=self.config.tiles).contains(&tile));
        tile - 1
    }

    /// Tile (1-based) on which a chain state sits.
    pub fn tile_of(&self, state: usize) -> usize {
        state.min(self.config.tiles - 1) + 1
    }

    pub fn arrival_state(&self) -> usize {
        self.config.tiles - 1
    }

    pub fn sink_state(&self) -> usize {
        self.config.tiles
    }

    /// Closed-form return of the always-right policy:
    /// `r · (q γ / (1 − p γ))^{S−1}` with `q = 1 − p`.
    pub fn always_right_return(&self) -> f64 {
        let CorridorConfig {
            tiles,
            idle_probability: p,
            target_reward,
            discount: gamma,
        } = self.config;
        let per_tile = (1.0 - p) * gamma / (1.0 - p * gamma);
        target_reward * per_tile.powi(tiles as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Mdp;

    #[test]
    fn left_wall_clips() {
        let c = make_corridor(CorridorConfig::default()).unwrap();
        assert_eq!(c.mdp().transition_probability(0, LEFT, 0), 1.0);
    }

    #[test]
    fn move_right_from_seven() {
        let c = make_corridor(CorridorConfig::default()).unwrap();
        let s7 = c.state_of_tile(7);
        assert!((c.mdp().transition_probability(s7, RIGHT, s7) - 0.7).abs() < 1e-15);
        assert!((c.mdp().transition_probability(s7, RIGHT, c.state_of_tile(8)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn layout_and_rows() {
        let c = make_corridor(CorridorConfig::default()).unwrap();
        assert_eq!(c.tiles(), 15);
        assert_eq!(c.mdp().n_actions(), 2);
        for s in 0..c.mdp().n_states() {
            for a in 0..2 {
                let total: f64 = c.mdp().successors(s, a).iter().map(|e| e.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(c.mdp().feature(&c.sink_state())[0], 15.0);
        assert_eq!(c.mdp().reward_of(c.arrival_state(), LEFT), 100.0);
        assert_eq!(c.mdp().reward_of(c.sink_state(), RIGHT), 0.0);
    }
}
