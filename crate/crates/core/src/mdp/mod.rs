//! Markov decision processes, trajectory sampling and returns.
//!
//! An [`Mdp`] is sampled through a [`Policy`] into [`Trajectory`] values. Finite
//! processes ([`FiniteMdp`]) additionally expose exact dynamic-programming
//! oracles in [`oracle`].

mod chain;
mod finite;
pub mod oracle;

pub use finite::FiniteMdp;
pub use oracle::{
    check_normalized, exact_policy_gradient, exact_return, exact_truncated_return, exact_visitation,
    first_reward_probability, policy_table, state_values, truncation_bias_bound, VisitationMeasure,
};

use std::fmt::Debug;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::policy::Policy;
use crate::rng::{self, Rng};

/// Feature vector `z = φ(s)` used by state-visitation bonuses. Only the first
/// [`Mdp::feature_dim`] entries are meaningful.
pub type Feature = [f64; 2];

pub trait Mdp: Sync {
    type State: Clone + Send + Sync + Debug;
    type Action: Clone + Send + Sync + Debug;

    fn discount(&self) -> f64;

    /// Declared bound on `|ρ(s, a)|`.
    fn reward_bound(&self) -> f64;

    fn initial_state(&self, rng: &mut Rng) -> Self::State;

    fn step(&self, state: &Self::State, action: &Self::Action, rng: &mut Rng)
        -> Result<Self::State>;

    fn reward(&self, state: &Self::State, action: &Self::Action) -> f64;

    fn feature(&self, state: &Self::State) -> Feature;

    fn feature_dim(&self) -> usize;
}

/// A sampled history of fixed length `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, A> {
    /// `s_0 .. s_T`
    pub states: Vec<S>,
    /// `a_0 .. a_{T-1}`
    pub actions: Vec<A>,
    /// Extrinsic rewards `r_t = ρ(s_t, a_t)`.
    pub rewards: Vec<f64>,
    /// One reward sequence per intrinsic bonus, filled in by the shaping layer.
    pub intrinsic: Vec<Vec<f64>>,
    pub seed: u64,
}

impl<S, A> Trajectory<S, A> {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// `Σ_t γ^t r_t` over the recorded rewards.
pub fn discounted_return<S, A>(traj: &Trajectory<S, A>, gamma: f64) -> f64 {
    discounted_sum(&traj.rewards, gamma)
}

pub(crate) fn discounted_sum(values: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for &v in values {
        total += discount * v;
        discount *= gamma;
    }
    total
}

/// Samples one trajectory on stream 0 of `seed`; identical to the first
/// member of [`sample_batch`] with the same seed.
pub fn sample_trajectory<M, P>(
    mdp: &M,
    policy: &P,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory<M::State, M::Action>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    rollout(mdp, policy, horizon, seed, 0)
}

/// Samples `count` independent trajectories; trajectory `i` uses stream `i`
/// of `seed`, so the batch is the same for any thread count.
pub fn sample_batch<M, P>(
    mdp: &M,
    policy: &P,
    count: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Trajectory<M::State, M::Action>>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if count == 0 {
        return Err(invalid("batch must contain at least one history"));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| rollout(mdp, policy, horizon, seed, i))
        .collect()
}

fn rollout<M, P>(
    mdp: &M,
    policy: &P,
    horizon: usize,
    seed: u64,
    index: u64,
) -> Result<Trajectory<M::State, M::Action>>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let mut rng = rng::stream(seed, index);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut state = mdp.initial_state(&mut rng);
    for _ in 0..horizon {
        let action = policy.sample(&state, &mut rng);
        rewards.push(mdp.reward(&state, &action));
        let next = mdp.step(&state, &action, &mut rng)?;
        states.push(std::mem::replace(&mut state, next));
        actions.push(action);
    }
    states.push(state);
    Ok(Trajectory {
        states,
        actions,
        rewards,
        intrinsic: Vec::new(),
        seed,
    })
}

/// Mean and standard error of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n: 0,
        }
    }
}
