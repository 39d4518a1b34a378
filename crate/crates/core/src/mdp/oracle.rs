//! Exact dynamic-programming oracles for finite MDPs.
//!
//! All quantities are infinite-horizon unless the name says "truncated". The
//! Monte-Carlo estimators elsewhere in the crate roll out fixed horizons `T`;
//! their bias against these values is bounded by `γ^T · r_max / (1 − γ)`.

use super::chain::ChainFactor;
use super::{FiniteMdp, Mdp, Trajectory};
use crate::error::{invalid, Result};
use crate::policy::DiscretePolicy;

/// Discounted state-visitation measure `d^{π,γ}`.
#[derive(Clone, Debug, PartialEq)]
pub enum VisitationMeasure {
    /// Probability vector over the states of a finite MDP.
    Finite { probabilities: Vec<f64>, discount: f64 },
    /// Weighted sample set (weights `γ^t`, normalized) for continuous spaces.
    Samples {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        discount: f64,
    },
}

impl VisitationMeasure {
    pub fn discount(&self) -> f64 {
        match self {
            Self::Finite { discount, .. } | Self::Samples { discount, .. } => *discount,
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::Finite { probabilities, .. } => probabilities.iter().sum(),
            Self::Samples { weights, .. } => weights.iter().sum(),
        }
    }

    /// Probability vector of the finite representation.
    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            Self::Finite { probabilities, .. } => Some(probabilities),
            Self::Samples { .. } => None,
        }
    }

    /// Empirical discounted visitation frequencies over finite states.
    pub fn empirical(trajectories: &[Trajectory<usize, usize>], n_states: usize, discount: f64) -> Self {
        let mut probabilities = vec![0.0; n_states];
        let mut total = 0.0;
        for traj in trajectories {
            let mut w = 1.0;
            for &s in &traj.states[..traj.horizon()] {
                probabilities[s] += w;
                total += w;
                w *= discount;
            }
        }
        if total > 0.0 {
            probabilities.iter_mut().for_each(|p| *p /= total);
        }
        Self::Finite { probabilities, discount }
    }

    /// Weighted sample set built from arbitrary trajectories through `point`.
    pub fn from_samples<S, A>(
        trajectories: &[Trajectory<S, A>],
        discount: f64,
        point: impl Fn(&S) -> Vec<f64>,
    ) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for traj in trajectories {
            let mut w = 1.0;
            for s in &traj.states[..traj.horizon()] {
                points.push(point(s));
                weights.push(w);
                w *= discount;
            }
        }
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Self::Samples { points, weights, discount }
    }

    /// Aggregates a finite measure by feature value (first coordinate, rounded).
    pub fn marginal_by_feature(&self, mdp: &FiniteMdp) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        if let Some(probs) = self.probabilities() {
            for (s, &p) in probs.iter().enumerate() {
                let key = mdp.features()[s][0].round() as i64;
                match out.iter_mut().find(|(k, _)| *k == key) {
                    Some(e) => e.1 += p,
                    None => out.push((key, p)),
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }
}

/// `π(·|s)` for every state.
pub fn policy_table<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Vec<Vec<f64>> {
    (0..mdp.n_states())
        .map(|s| policy.probabilities(s, mdp.n_actions()))
        .collect()
}

struct InducedChain {
    n: usize,
    /// Row-major `P^π`.
    transition: Vec<f64>,
    reward: Vec<f64>,
}

fn induced_chain(mdp: &FiniteMdp, table: &[Vec<f64>]) -> InducedChain {
    let n = mdp.n_states();
    let mut transition = vec![0.0; n * n];
    let mut reward = vec![0.0; n];
    for s in 0..n {
        for (a, &pa) in table[s].iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            reward[s] += pa * mdp.reward_of(s, a);
            for &(next, p) in mdp.successors(s, a) {
                transition[s * n + next] += pa * p;
            }
        }
    }
    InducedChain { n, transition, reward }
}

impl InducedChain {
    fn factor(&self, gamma: f64) -> Result<ChainFactor> {
        ChainFactor::new(&self.transition, self.n, gamma)
    }
}

/// State values `v = r^π + γ P^π v`.
pub fn state_values<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Result<Vec<f64>> {
    let table = policy_table(mdp, policy);
    values_from_table(mdp, &table)
}

fn values_from_table(mdp: &FiniteMdp, table: &[Vec<f64>]) -> Result<Vec<f64>> {
    let chain = induced_chain(mdp, table);
    Ok(chain.factor(mdp.discount())?.solve(&chain.reward))
}

/// Exact infinite-horizon return `J(π) = E_{p0}[v(s_0)]`.
pub fn exact_return<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Result<f64> {
    let v = state_values(mdp, policy)?;
    Ok(mdp
        .initial_distribution()
        .iter()
        .zip(&v)
        .map(|(p, v)| p * v)
        .sum())
}

/// `d = (1 − γ)(I − γ P^πᵀ)^{-1} p0`.
pub fn exact_visitation<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Result<VisitationMeasure> {
    let table = policy_table(mdp, policy);
    visitation_from_table(mdp, &table)
}

fn visitation_from_table(mdp: &FiniteMdp, table: &[Vec<f64>]) -> Result<VisitationMeasure> {
    let chain = induced_chain(mdp, table);
    let gamma = mdp.discount();
    let occupancy = chain.factor(gamma)?.solve_transposed(&mdp.initial_distribution());
    Ok(VisitationMeasure::Finite {
        probabilities: occupancy.iter().map(|x| (1.0 - gamma) * x).collect(),
        discount: gamma,
    })
}

/// `∇J = Σ_{s,a} d(s) ∇π(a|s) Q(s,a) / (1 − γ)`; actions of zero probability
/// still contribute at the boundary of the simplex.
pub fn exact_policy_gradient<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Result<Vec<f64>> {
    let table = policy_table(mdp, policy);
    let values = values_from_table(mdp, &table)?;
    let visitation = visitation_from_table(mdp, &table)?;
    let d = visitation.probabilities().expect("finite measure");
    let gamma = mdp.discount();
    let mut grad = vec![0.0; policy.params().len()];
    for s in 0..mdp.n_states() {
        if d[s] == 0.0 {
            continue;
        }
        for a in 0..table[s].len() {
            let q = mdp.reward_of(s, a)
                + gamma
                    * mdp
                        .successors(s, a)
                        .iter()
                        .map(|&(next, p)| p * values[next])
                        .sum::<f64>();
            let weight = d[s] * q / (1.0 - gamma);
            for (g, dp) in grad.iter_mut().zip(policy.probability_gradient(s, a, mdp.n_actions())) {
                *g += weight * dp;
            }
        }
    }
    Ok(grad)
}

/// `Σ_{t<T} γ^t E[r_t]` by forward propagation of the state distribution.
pub fn exact_truncated_return<P: DiscretePolicy>(
    mdp: &FiniteMdp,
    policy: &P,
    horizon: usize,
) -> f64 {
    let table = policy_table(mdp, policy);
    let reward: Vec<f64> = (0..mdp.n_states())
        .map(|s| table[s].iter().enumerate().map(|(a, pa)| pa * mdp.reward_of(s, a)).sum())
        .collect();
    let mut dist = mdp.initial_distribution();
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        total += discount * dist.iter().zip(&reward).map(|(p, r)| p * r).sum::<f64>();
        dist = propagate(mdp, &table, &dist);
        discount *= mdp.discount();
    }
    total
}

fn propagate(mdp: &FiniteMdp, table: &[Vec<f64>], dist: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; dist.len()];
    for (s, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (a, &pa) in table[s].iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for &(n, pt) in mdp.successors(s, a) {
                next[n] += p * pa * pt;
            }
        }
    }
    next
}

/// Probability that a length-`horizon` history observes at least one nonzero
/// extrinsic reward. Mass is propagated only along reward-free paths; the rest
/// is absorbed into the "hit" event.
pub fn first_reward_probability<P: DiscretePolicy>(
    mdp: &FiniteMdp,
    policy: &P,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let table = policy_table(mdp, policy);
    let mut free = mdp.initial_distribution();
    let mut hit = 0.0;
    for _ in 0..horizon {
        let mut next = vec![0.0; free.len()];
        for (s, &p) in free.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (a, &pa) in table[s].iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                if mdp.reward_of(s, a) != 0.0 {
                    hit += p * pa;
                    continue;
                }
                for &(n, pt) in mdp.successors(s, a) {
                    next[n] += p * pa * pt;
                }
            }
        }
        free = next;
    }
    Ok(hit)
}

/// Checks `Σ d = 1` and non-negativity.
pub fn check_normalized(measure: &VisitationMeasure, tol: f64) -> bool {
    let ok_sign = match measure {
        VisitationMeasure::Finite { probabilities, .. } => probabilities.iter().all(|p| *p >= -tol),
        VisitationMeasure::Samples { weights, .. } => weights.iter().all(|w| *w >= 0.0),
    };
    ok_sign && (measure.total_mass() - 1.0).abs() <= tol
}

/// Bound on the bias of a `T`-step Monte-Carlo return against the
/// infinite-horizon value.
pub fn truncation_bias_bound(mdp: &FiniteMdp, horizon: usize) -> f64 {
    mdp.discount().powi(horizon as i32) * mdp.reward_bound() / (1.0 - mdp.discount())
}
