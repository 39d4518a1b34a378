use rand_distr::{Distribution, StandardNormal};

use super::Policy;
use crate::env::HillState;
use crate::rng::Rng;

/// Noisy proportional controller `a ~ N(K (x − x_target), σ²)`, `θ = (K, σ)`.
///
/// `σ` is floored at [`Self::SIGMA_MIN`]; below the floor the density uses the
/// floor and the `σ` component of the score is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionalGaussianPolicy {
    theta: [f64; 2],
    target: f64,
}

impl ProportionalGaussianPolicy {
    pub const SIGMA_MIN: f64 = 1e-3;

    pub fn new(gain: f64, sigma: f64, target: f64) -> Self {
        Self {
            theta: [gain, sigma],
            target,
        }
    }

    pub fn gain(&self) -> f64 {
        self.theta[0]
    }

    pub fn sigma(&self) -> f64 {
        self.theta[1].max(Self::SIGMA_MIN)
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn mean(&self, state: &HillState) -> f64 {
        self.theta[0] * (state.x - self.target)
    }
}

impl Policy<HillState> for ProportionalGaussianPolicy {
    type Action = f64;

    fn family(&self) -> &'static str {
        "gaussian"
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn with_params(&self, params: &[f64]) -> Self {
        Self::new(params[0], params[1], self.target)
    }

    fn sample(&self, state: &HillState, rng: &mut Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean(state) + self.sigma() * z
    }

    fn log_prob(&self, state: &HillState, action: &f64) -> f64 {
        let sigma = self.sigma();
        let z = (action - self.mean(state)) / sigma;
        -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }

    fn grad_log_prob(&self, state: &HillState, action: &f64) -> Vec<f64> {
        let sigma = self.sigma();
        let residual = action - self.mean(state);
        let d_gain = residual * (state.x - self.target) / (sigma * sigma);
        let d_sigma = if self.theta[1] >= Self::SIGMA_MIN {
            residual * residual / sigma.powi(3) - 1.0 / sigma
        } else {
            0.0
        };
        vec![d_gain, d_sigma]
    }
}
