//! Differentiable stochastic policies.

pub mod bernoulli;
mod gaussian;
mod mlp;
pub mod snapshot;

pub use bernoulli::BernoulliPolicy;
pub use gaussian::ProportionalGaussianPolicy;
pub use mlp::{CategoricalMlpPolicy, Mlp};

use crate::rng::Rng;

/// A parameterized policy `π_θ(a|s)` over states `S`.
///
/// Policies are immutable values: parameter updates go through
/// [`Policy::with_params`] and produce a new policy.
pub trait Policy<S>: Clone + Send + Sync {
    type Action: Clone + Send + Sync + std::fmt::Debug;

    /// Family tag used in snapshots and logs.
    fn family(&self) -> &'static str;

    fn params(&self) -> &[f64];

    fn with_params(&self, params: &[f64]) -> Self;

    fn sample(&self, state: &S, rng: &mut Rng) -> Self::Action;

    fn log_prob(&self, state: &S, action: &Self::Action) -> f64;

    /// `∇_θ log π_θ(a|s)`.
    fn grad_log_prob(&self, state: &S, action: &Self::Action) -> Vec<f64>;

    /// Adds `Σ_i w_i ∇_θ log π_θ(a_i|s_i)` into `out`.
    fn accumulate_scores<'a, I>(&self, steps: I, out: &mut [f64])
    where
        I: IntoIterator<Item = (&'a S, &'a Self::Action, f64)>,
        S: 'a,
        Self::Action: 'a,
    {
        for (s, a, w) in steps {
            if w == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(self.grad_log_prob(s, a)) {
                *o += w * g;
            }
        }
    }
}

/// A policy over the integer states and actions of a finite MDP, able to
/// report its full action distribution (needed by the exact oracles).
pub trait DiscretePolicy: Policy<usize, Action = usize> {
    fn probabilities(&self, state: usize, n_actions: usize) -> Vec<f64>;

    /// `∇_θ π_θ(a|s)`. The default `π ∇log π` vanishes for actions of zero
    /// probability; families that reach the simplex boundary override it.
    fn probability_gradient(&self, state: usize, action: usize, n_actions: usize) -> Vec<f64> {
        let p = self.probabilities(state, n_actions)[action];
        self.grad_log_prob(&state, &action).into_iter().map(|g| p * g).collect()
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
