//! Infinite-horizon shaped objective of a finite MDP, with the true
//! discounted visitation measure in place of a batch estimate.

use crate::error::{Error, Result};
use crate::mdp::{exact_return, exact_visitation, FiniteMdp, Mdp};
use crate::policy::DiscretePolicy;

use super::histogram::FLOOR_NUMERATOR;
use super::{BonusKind, DensitySpec, IntrinsicBonus};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactObjective {
    pub j: f64,
    /// Unweighted `J_k` per bonus.
    pub intrinsic: Vec<f64>,
    pub l: f64,
}

/// `J_k = (1/(1−γ)) Σ_s d(s) E_{a~π}[ρ_k(s, a)]`. State bonuses use the
/// floored histogram of the exact visitation; mixture estimators have no exact
/// counterpart and are rejected.
pub fn exact_shaped_objective<P: DiscretePolicy>(
    mdp: &FiniteMdp,
    policy: &P,
    bonuses: &[IntrinsicBonus],
) -> Result<ExactObjective> {
    let j = exact_return(mdp, policy)?;
    let scale = 1.0 / (1.0 - mdp.discount());
    let visitation = exact_visitation(mdp, policy)?;
    let d = visitation.probabilities().expect("finite visitation");
    let mut intrinsic = Vec::with_capacity(bonuses.len());
    for bonus in bonuses {
        let value = match &bonus.kind {
            BonusKind::ActionEntropy => d
                .iter()
                .enumerate()
                .map(|(s, ds)| {
                    let h: f64 = policy
                        .probabilities(s, mdp.n_actions())
                        .iter()
                        .filter(|p| **p > 0.0)
                        .map(|p| -p * p.ln())
                        .sum();
                    ds * h
                })
                .sum::<f64>(),
            BonusKind::StateEntropy(DensitySpec::Histogram { binning }) => {
                let bins = binning.len();
                let mut masses = vec![0.0; bins];
                for (s, ds) in d.iter().enumerate() {
                    masses[binning.bin(mdp.features()[s][0])] += ds;
                }
                let floor = FLOOR_NUMERATOR / bins as f64;
                let norm = 1.0 + floor * bins as f64;
                let floored: Vec<f64> = masses.iter().map(|m| (m + floor) / norm).collect();
                d.iter()
                    .enumerate()
                    .map(|(s, ds)| -ds * floored[binning.bin(mdp.features()[s][0])].ln())
                    .sum::<f64>()
            }
            BonusKind::StateEntropy(DensitySpec::Gmm { .. }) => {
                return Err(Error::Unsupported(
                    "mixture state bonuses have no exact objective".into(),
                ))
            }
        };
        intrinsic.push(scale * value);
    }
    let l = j + bonuses
        .iter()
        .zip(&intrinsic)
        .filter(|(b, _)| b.weight != 0.0)
        .map(|(b, v)| b.weight * v)
        .sum::<f64>();
    Ok(ExactObjective { j, intrinsic, l })
}

/// Central finite differences of the exact `L` in every parameter.
pub fn exact_shaped_gradient<P: DiscretePolicy>(
    mdp: &FiniteMdp,
    policy: &P,
    bonuses: &[IntrinsicBonus],
    step: f64,
) -> Result<Vec<f64>> {
    let theta = policy.params().to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[i] += step;
        minus[i] -= step;
        let lp = exact_shaped_objective(mdp, &policy.with_params(&plus), bonuses)?.l;
        let lm = exact_shaped_objective(mdp, &policy.with_params(&minus), bonuses)?.l;
        grad.push((lp - lm) / (2.0 * step));
    }
    Ok(grad)
}
