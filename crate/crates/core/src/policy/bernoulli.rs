use rand::Rng as _;

use super::{DiscretePolicy, Policy};
use crate::rng::Rng;

/// Action index of "move left" (`a = −1`).
pub const LEFT: usize = 0;
/// Action index of "move right" (`a = +1`).
pub const RIGHT: usize = 1;

/// State-independent direction policy: right with probability `θ`.
///
/// Probabilities use `θ` as given; only the log-density is floored at
/// `log θ_min`, with a zero gradient below the floor.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliPolicy {
    theta: [f64; 1],
}

impl BernoulliPolicy {
    pub const THETA_MIN: f64 = 1e-6;

    pub fn new(theta: f64) -> Self {
        Self {
            theta: [theta.clamp(0.0, 1.0)],
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta[0]
    }

    fn prob(&self, action: usize) -> f64 {
        if action == RIGHT {
            self.theta[0]
        } else {
            1.0 - self.theta[0]
        }
    }
}

impl<S> Policy<S> for BernoulliPolicy {
    type Action = usize;

    fn family(&self) -> &'static str {
        "bernoulli"
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn with_params(&self, params: &[f64]) -> Self {
        Self::new(params[0])
    }

    fn sample(&self, _state: &S, rng: &mut Rng) -> usize {
        let u: f64 = rng.gen();
        if u < self.theta[0] {
            RIGHT
        } else {
            LEFT
        }
    }

    fn log_prob(&self, _state: &S, action: &usize) -> f64 {
        self.prob(*action).max(Self::THETA_MIN).ln()
    }

    fn grad_log_prob(&self, _state: &S, action: &usize) -> Vec<f64> {
        let p = self.prob(*action);
        if p < Self::THETA_MIN {
            return vec![0.0];
        }
        if *action == RIGHT {
            vec![1.0 / p]
        } else {
            vec![-1.0 / p]
        }
    }
}

impl DiscretePolicy for BernoulliPolicy {
    fn probabilities(&self, _state: usize, n_actions: usize) -> Vec<f64> {
        debug_assert_eq!(n_actions, 2, "the direction policy has two actions");
        vec![1.0 - self.theta[0], self.theta[0]]
    }

    fn probability_gradient(&self, _state: usize, action: usize, _n_actions: usize) -> Vec<f64> {
        if action == RIGHT {
            vec![1.0]
        } else {
            vec![-1.0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_parameters() {
        let always_right = BernoulliPolicy::new(1.0);
        let mut rng = crate::rng::stream(3, 0);
        assert!((0..1000).all(|_| Policy::<()>::sample(&always_right, &(), &mut rng) == RIGHT));
        let lp = Policy::<()>::log_prob(&always_right, &(), &LEFT);
        assert_eq!(lp, BernoulliPolicy::THETA_MIN.ln());
        assert_eq!(Policy::<()>::grad_log_prob(&always_right, &(), &LEFT), vec![0.0]);
    }

    #[test]
    fn half_policy_values() {
        let p = BernoulliPolicy::new(0.5);
        for a in [LEFT, RIGHT] {
            assert!((Policy::<()>::log_prob(&p, &(), &a) + std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert_eq!(Policy::<()>::grad_log_prob(&p, &(), &RIGHT), vec![2.0]);
        assert_eq!(Policy::<()>::grad_log_prob(&p, &(), &LEFT), vec![-2.0]);
    }
}
