use rand::Rng as _;

use super::{Feature, Mdp};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

const ROW_TOLERANCE: f64 = 1e-12;

/// A finite MDP with states `0..n_states` and actions `0..n_actions`.
///
/// Transition rows are stored sparsely, in insertion order, which fixes how a
/// uniform draw maps to a successor; dense matrices are built on demand by the
/// oracles.
#[derive(Clone, Debug)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    initial: Vec<(usize, f64)>,
    transitions: Vec<Vec<(usize, f64)>>,
    rewards: Vec<f64>,
    discount: f64,
    reward_bound: f64,
    features: Vec<Feature>,
    feature_dim: usize,
}

impl FiniteMdp {
    /// `transitions[s * n_actions + a]` lists `(s', p)` pairs; duplicate
    /// successors are merged and zero-probability entries dropped.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        initial: Vec<f64>,
        transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("state and action spaces must be non-empty"));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(invalid(format!("discount {discount} outside [0, 1)")));
        }
        if initial.len() != n_states {
            return Err(invalid("initial distribution has wrong length"));
        }
        if transitions.len() != n_states * n_actions || rewards.len() != n_states * n_actions {
            return Err(invalid("transition/reward tables must have n_states * n_actions rows"));
        }
        check_distribution(&initial, "initial distribution")?;
        let initial = initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (s, p))
            .collect();

        let mut merged = Vec::with_capacity(transitions.len());
        for (row_index, row) in transitions.into_iter().enumerate() {
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (next, p) in row {
                if next >= n_states {
                    return Err(invalid(format!("row {row_index}: successor {next} out of range")));
                }
                if !(p >= 0.0) {
                    return Err(invalid(format!("row {row_index}: negative probability")));
                }
                if p == 0.0 {
                    continue;
                }
                match out.iter_mut().find(|(s, _)| *s == next) {
                    Some(entry) => entry.1 += p,
                    None => out.push((next, p)),
                }
            }
            let total: f64 = out.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(invalid(format!("row {row_index} sums to {total}, not 1")));
            }
            merged.push(out);
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(invalid("rewards must be finite"));
        }
        let reward_bound = rewards.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Ok(Self {
            n_states,
            n_actions,
            initial,
            transitions: merged,
            rewards,
            discount,
            reward_bound,
            features: (0..n_states).map(|s| [s as f64, 0.0]).collect(),
            feature_dim: 1,
        })
    }

    /// Replaces the default `φ(s) = s` feature map.
    pub fn with_features(mut self, features: Vec<Feature>, dim: usize) -> Result<Self> {
        if features.len() != self.n_states || !(1..=2).contains(&dim) {
            return Err(invalid("feature table must have one entry per state, dim 1 or 2"));
        }
        self.features = features;
        self.feature_dim = dim;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Dense initial distribution `p0`.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let mut p0 = vec![0.0; self.n_states];
        for &(s, p) in &self.initial {
            p0[s] = p;
        }
        p0
    }

    /// Sparse successor list of `(s, a)`.
    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[state * self.n_actions + action]
    }

    /// `P(s' | s, a)` read from the table.
    pub fn transition_probability(&self, state: usize, action: usize, next: usize) -> f64 {
        self.successors(state, action)
            .iter()
            .find(|(s, _)| *s == next)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn reward_of(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid(format!("{what} has negative entries")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > ROW_TOLERANCE {
        return Err(invalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn draw(entries: &[(usize, f64)], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(s, p) in entries {
        acc += p;
        if u < acc {
            return s;
        }
    }
    entries.last().map(|e| e.0).unwrap_or(0)
}

impl Mdp for FiniteMdp {
    type State = usize;
    type Action = usize;

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    fn initial_state(&self, rng: &mut Rng) -> usize {
        draw(&self.initial, rng)
    }

    fn step(&self, state: &usize, action: &usize, rng: &mut Rng) -> Result<usize> {
        if *state >= self.n_states || *action >= self.n_actions {
            return Err(Error::EnvironmentContract(format!(
                "state {state} / action {action} outside the finite spaces"
            )));
        }
        Ok(draw(self.successors(*state, *action), rng))
    }

    fn reward(&self, state: &usize, action: &usize) -> f64 {
        self.reward_of(*state, *action)
    }

    fn feature(&self, state: &usize) -> Feature {
        self.features[*state]
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> FiniteMdp {
        FiniteMdp::new(
            2,
            1,
            vec![1.0, 0.0],
            vec![vec![(0, 0.5), (1, 0.25), (1, 0.25)], vec![(1, 1.0)]],
            vec![0.0, 1.0],
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn duplicate_successors_are_merged() {
        let mdp = coin();
        assert_eq!(mdp.successors(0, 0), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(mdp.reward_bound(), 1.0);
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        let bad_row = FiniteMdp::new(1, 1, vec![1.0], vec![vec![(0, 0.9)]], vec![0.0], 0.5);
        assert!(bad_row.is_err());
        let bad_gamma = FiniteMdp::new(1, 1, vec![1.0], vec![vec![(0, 1.0)]], vec![0.0], 1.0);
        assert!(bad_gamma.is_err());
    }

    #[test]
    fn out_of_space_action_is_a_contract_violation() {
        let mdp = coin();
        let mut rng = crate::rng::stream(0, 0);
        assert!(matches!(mdp.step(&0, &3, &mut rng), Err(Error::EnvironmentContract(_))));
    }
}
