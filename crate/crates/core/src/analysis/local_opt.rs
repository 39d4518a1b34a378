use serde::Serialize;

use crate::error::Result;
use crate::mdp::{exact_visitation, FiniteMdp};
use crate::policy::DiscretePolicy;

/// Discounted probability of acting where the reward is exactly zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalOptimalityDiagnostic {
    /// `Δ̂ = Σ_{s,a} d(s) π(a|s) 1[ρ(s, a) = 0]`
    pub delta: f64,
    pub zero_pairs: usize,
    pub description: String,
}

pub fn zero_reward_mass<P: DiscretePolicy>(mdp: &FiniteMdp, policy: &P) -> Result<LocalOptimalityDiagnostic> {
    let d = exact_visitation(mdp, policy)?;
    let d = d.probabilities().expect("finite visitation");
    let mut delta = 0.0;
    let mut zero_pairs = 0;
    for (s, ds) in d.iter().enumerate() {
        let probs = policy.probabilities(s, mdp.n_actions());
        for (a, pa) in probs.iter().enumerate() {
            if mdp.reward_of(s, a) == 0.0 {
                zero_pairs += 1;
                delta += ds * pa;
            }
        }
    }
    Ok(LocalOptimalityDiagnostic {
        delta: delta.clamp(0.0, 1.0),
        zero_pairs,
        description: format!("{zero_pairs} state-action pairs with zero reward"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_corridor, CorridorConfig};
    use crate::policy::BernoulliPolicy;

    #[test]
    fn never_moving_stays_in_the_zero_set() {
        let c = make_corridor(CorridorConfig::default()).unwrap();
        let diag = zero_reward_mass(c.mdp(), &BernoulliPolicy::new(0.0)).unwrap();
        assert!((diag.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_rewards_everywhere_give_zero() {
        let mdp = FiniteMdp::new(1, 2, vec![1.0], vec![vec![(0, 1.0)]; 2], vec![1.0, 2.0], 0.5).unwrap();
        let diag = zero_reward_mass(&mdp, &BernoulliPolicy::new(0.5)).unwrap();
        assert_eq!(diag.delta, 0.0);
    }
}
