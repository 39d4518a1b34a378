//! Intrinsic bonuses, visitation density estimators and the shaped objective
//! `L(θ) = J(θ) + Σ_k λ_k J_k(θ)`.

mod exact;
mod gmm;
mod histogram;

pub use exact::{exact_shaped_gradient, exact_shaped_objective, ExactObjective};
pub use gmm::{fit_gmm, fit_gmm_weighted, GaussianMixture, EIGEN_FLOOR, MAX_ITERATIONS, TOLERANCE};
pub use histogram::{fit_visitation_histogram, Binning, Histogram, FLOOR_NUMERATOR};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::{discounted_sum, sample_batch, Estimate, Mdp, Trajectory};
use crate::policy::Policy;
use crate::rng;

/// How the state-visitation density is estimated from a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySpec {
    /// Discounted histogram over the first feature coordinate.
    Histogram { binning: Binning },
    /// Mixture fitted to the raw (undiscounted) batch features.
    Gmm { components: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BonusKind {
    /// `ρ^a(s, a) = −log π(a|s)`
    ActionEntropy,
    /// `ρ^s(s, a) = −log d̂(φ(s))`
    StateEntropy(DensitySpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntrinsicBonus {
    pub kind: BonusKind,
    /// `λ ≥ 0`
    pub weight: f64,
    /// Column suffix in logs, e.g. `a` or `s`.
    pub label: String,
}

impl IntrinsicBonus {
    pub fn action_entropy(weight: f64) -> Self {
        Self {
            kind: BonusKind::ActionEntropy,
            weight,
            label: "a".into(),
        }
    }

    pub fn state_entropy(weight: f64, density: DensitySpec) -> Self {
        Self {
            kind: BonusKind::StateEntropy(density),
            weight,
            label: "s".into(),
        }
    }

    pub fn with_weight(&self, weight: f64) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }
}

/// `−log π(a|s)`
pub fn action_entropy_bonus<S, P: Policy<S>>(policy: &P, state: &S, action: &P::Action) -> f64 {
    -policy.log_prob(state, action)
}

/// A fitted visitation density.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityEstimator {
    Histogram(Histogram),
    Gmm(GaussianMixture),
}

impl DensityEstimator {
    /// Mass (histogram) or density (mixture) at a feature vector.
    pub fn density(&self, feature: &[f64]) -> f64 {
        match self {
            Self::Histogram(h) => h.mass(feature),
            Self::Gmm(g) => g.density(&feature[..g.dim()]),
        }
    }

    pub fn log_density(&self, feature: &[f64]) -> f64 {
        match self {
            Self::Histogram(h) => h.mass(feature).ln(),
            Self::Gmm(g) => g.log_density(&feature[..g.dim()]),
        }
    }

    pub fn dump(&self) -> String {
        match self {
            Self::Histogram(h) => h.dump(),
            Self::Gmm(g) => g.dump(),
        }
    }
}

/// Fits the estimator described by `spec` to a batch of trajectories.
pub fn fit_density<M: Mdp>(
    mdp: &M,
    trajectories: &[Trajectory<M::State, M::Action>],
    spec: &DensitySpec,
    seed: u64,
) -> Result<DensityEstimator> {
    match spec {
        DensitySpec::Histogram { binning } => Ok(DensityEstimator::Histogram(fit_visitation_histogram(
            trajectories,
            mdp.discount(),
            |s| mdp.feature(s),
            binning.clone(),
        )?)),
        DensitySpec::Gmm { components } => {
            let dim = mdp.feature_dim();
            let samples: Vec<Vec<f64>> = trajectories
                .iter()
                .flat_map(|t| t.states[..t.horizon()].iter())
                .map(|s| mdp.feature(s)[..dim].to_vec())
                .collect();
            Ok(DensityEstimator::Gmm(fit_gmm(&samples, *components, seed)?))
        }
    }
}

/// The shaped objective with a fixed evaluation budget.
#[derive(Debug)]
pub struct ShapedObjective<'a, M> {
    pub mdp: &'a M,
    pub bonuses: Vec<IntrinsicBonus>,
    pub histories: usize,
    pub horizon: usize,
}

impl<M> Clone for ShapedObjective<'_, M> {
    fn clone(&self) -> Self {
        Self {
            mdp: self.mdp,
            bonuses: self.bonuses.clone(),
            histories: self.histories,
            horizon: self.horizon,
        }
    }
}

/// A sampled batch with its intrinsic rewards filled in.
#[derive(Clone, Debug)]
pub struct ShapedBatch<S, A> {
    pub trajectories: Vec<Trajectory<S, A>>,
    /// One entry per bonus; `None` for action-entropy bonuses.
    pub estimators: Vec<Option<DensityEstimator>>,
    pub seed: u64,
}

/// Per-history discounted sums of every reward component.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveEstimate {
    /// `Σ_t γ^t r_t` per history.
    pub returns: Vec<f64>,
    /// `Σ_t γ^t ρ_k(s_t, a_t)` per bonus, per history.
    pub intrinsic_returns: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ObjectiveEstimate {
    pub fn j(&self) -> Estimate {
        Estimate::from_samples(&self.returns)
    }

    pub fn intrinsic(&self, k: usize) -> Estimate {
        Estimate::from_samples(&self.intrinsic_returns[k])
    }

    /// `L̂` under the objective's own weights.
    pub fn l(&self) -> Estimate {
        self.combination(&self.weights)
    }

    /// `Ĵ + Σ_k w_k Ĵ_k`; zero weights contribute nothing, so all-zero
    /// weights reproduce `Ĵ` bit for bit.
    pub fn combination(&self, weights: &[f64]) -> Estimate {
        Estimate::from_samples(&self.combined_samples(weights))
    }

    pub fn combined_samples(&self, weights: &[f64]) -> Vec<f64> {
        let mut samples = self.returns.clone();
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s, b) in samples.iter_mut().zip(&self.intrinsic_returns[k]) {
                *s += w * b;
            }
        }
        samples
    }
}

impl<'a, M: Mdp> ShapedObjective<'a, M> {
    pub fn new(mdp: &'a M, bonuses: Vec<IntrinsicBonus>, histories: usize, horizon: usize) -> Result<Self> {
        if histories == 0 || horizon == 0 {
            return Err(invalid("evaluation budget needs at least one history of positive length"));
        }
        if let Some(b) = bonuses.iter().find(|b| !(b.weight >= 0.0) || !b.weight.is_finite()) {
            return Err(invalid(format!("bonus `{}` has invalid weight {}", b.label, b.weight)));
        }
        Ok(Self {
            mdp,
            bonuses,
            histories,
            horizon,
        })
    }

    /// The same budget without bonuses.
    pub fn unshaped(&self) -> Self {
        Self {
            bonuses: Vec::new(),
            ..self.clone()
        }
    }

    pub fn with_bonuses(&self, bonuses: Vec<IntrinsicBonus>) -> Self {
        Self {
            bonuses,
            ..self.clone()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.bonuses.iter().map(|b| b.weight).collect()
    }

    /// Samples `histories` trajectories and fills their intrinsic rewards.
    /// State bonuses refit their estimator on this batch.
    pub fn sample<P>(&self, policy: &P, seed: u64) -> Result<ShapedBatch<M::State, M::Action>>
    where
        P: Policy<M::State, Action = M::Action>,
    {
        let trajectories = sample_batch(self.mdp, policy, self.histories, self.horizon, seed)?;
        self.shape(policy, trajectories, seed)
    }

    /// Computes every bonus on an existing batch.
    pub fn shape<P>(
        &self,
        policy: &P,
        mut trajectories: Vec<Trajectory<M::State, M::Action>>,
        seed: u64,
    ) -> Result<ShapedBatch<M::State, M::Action>>
    where
        P: Policy<M::State, Action = M::Action>,
    {
        let mut estimators = Vec::with_capacity(self.bonuses.len());
        for t in &mut trajectories {
            t.intrinsic = Vec::with_capacity(self.bonuses.len());
        }
        for (k, bonus) in self.bonuses.iter().enumerate() {
            match &bonus.kind {
                BonusKind::ActionEntropy => {
                    for t in &mut trajectories {
                        let values = t
                            .states
                            .iter()
                            .zip(&t.actions)
                            .map(|(s, a)| action_entropy_bonus(policy, s, a))
                            .collect();
                        t.intrinsic.push(values);
                    }
                    estimators.push(None);
                }
                BonusKind::StateEntropy(spec) => {
                    let est = fit_density(self.mdp, &trajectories, spec, rng::derive(seed, k as u64))?;
                    for t in &mut trajectories {
                        let values = t.states[..t.horizon()]
                            .iter()
                            .map(|s| -est.log_density(&self.mdp.feature(s)))
                            .collect();
                        t.intrinsic.push(values);
                    }
                    estimators.push(Some(est));
                }
            }
        }
        Ok(ShapedBatch {
            trajectories,
            estimators,
            seed,
        })
    }

    /// Discounted sums of every component over a shaped batch.
    pub fn summarize(&self, batch: &ShapedBatch<M::State, M::Action>) -> ObjectiveEstimate {
        let gamma = self.mdp.discount();
        ObjectiveEstimate {
            returns: batch
                .trajectories
                .iter()
                .map(|t| discounted_sum(&t.rewards, gamma))
                .collect(),
            intrinsic_returns: (0..self.bonuses.len())
                .map(|k| {
                    batch
                        .trajectories
                        .iter()
                        .map(|t| discounted_sum(&t.intrinsic[k], gamma))
                        .collect()
                })
                .collect(),
            weights: self.weights(),
        }
    }
}

/// Monte-Carlo estimate of `L̂`, `Ĵ` and every `Ĵ_k` at the given policy.
pub fn evaluate_shaped_objective<M, P>(obj: &ShapedObjective<M>, policy: &P, seed: u64) -> Result<ObjectiveEstimate>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let batch = obj.sample(policy, seed)?;
    Ok(obj.summarize(&batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_corridor, CorridorConfig};
    use crate::policy::BernoulliPolicy;

    #[test]
    fn no_bonuses_reduces_to_the_return() {
        let corridor = make_corridor(CorridorConfig::default()).unwrap();
        let obj = ShapedObjective::new(corridor.mdp(), vec![], 16, 50).unwrap();
        let est = evaluate_shaped_objective(&obj, &BernoulliPolicy::new(0.8), 3).unwrap();
        assert_eq!(est.l(), est.j());
    }

    #[test]
    fn fair_coin_action_bonus_is_constant() {
        let corridor = make_corridor(CorridorConfig::default()).unwrap();
        let obj = ShapedObjective::new(corridor.mdp(), vec![IntrinsicBonus::action_entropy(1.0)], 8, 100).unwrap();
        let est = evaluate_shaped_objective(&obj, &BernoulliPolicy::new(0.5), 0).unwrap();
        let expected = 2f64.ln() * (1.0 - 0.99f64.powi(100)) / 0.01;
        assert!((est.intrinsic(0).mean - expected).abs() < 1e-9);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let corridor = make_corridor(CorridorConfig::default()).unwrap();
        assert!(ShapedObjective::new(corridor.mdp(), vec![IntrinsicBonus::action_entropy(-0.1)], 8, 10).is_err());
    }
}
