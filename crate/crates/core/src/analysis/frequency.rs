use rayon::prelude::*;

use crate::error::Result;
use crate::learn::OptimizerState;
use crate::policy::Policy;
use crate::rng;

use super::improvement::Proportion;

/// Settings of the multi-step improvement test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencySettings {
    pub trials: usize,
    pub steps: usize,
    pub threshold: f64,
    pub step_size: f64,
    pub seed: u64,
}

impl FrequencySettings {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            steps: 5,
            threshold: 0.2,
            step_size: 5e-4,
            seed,
        }
    }
}

/// Seed of step `step` in trial `trial`.
pub fn trial_step_seed(seed: u64, trial: usize, step: usize) -> u64 {
    rng::derive(rng::derive(rng::derive(seed, rng::TAG_TRIAL), trial as u64), step as u64)
}

/// Fraction of trials in which `steps` fresh-Adam updates along
/// `direction(π, seed)` raise `score(π)` by more than `threshold`.
/// The score is evaluated once at the start and once per trial; callers make
/// it deterministic (exact, or sampled with a fixed seed) so that differences
/// reflect the parameters only.
pub fn multi_step_improvement_frequency<S, P, D, F>(
    policy: &P,
    settings: FrequencySettings,
    direction: D,
    score: F,
) -> Result<Proportion>
where
    P: Policy<S>,
    D: Fn(&P, u64) -> Result<Vec<f64>> + Sync,
    F: Fn(&P) -> Result<f64> + Sync,
{
    let base = score(policy)?;
    let improved = (0..settings.trials)
        .into_par_iter()
        .map(|trial| -> Result<bool> {
            let mut current = policy.clone();
            let mut opt = OptimizerState::adam(settings.step_size);
            for step in 0..settings.steps {
                let d = direction(&current, trial_step_seed(settings.seed, trial, step))?;
                let next = opt.update(current.params(), &d)?;
                current = current.with_params(&next);
            }
            Ok(score(&current)? - base > settings.threshold)
        })
        .collect::<Result<Vec<bool>>>()?;
    Proportion::new(improved.into_iter().filter(|b| *b).count(), settings.trials)
}
