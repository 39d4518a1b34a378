use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::{Feature, Mdp};
use crate::rng::Rng;

/// Car position and speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillState {
    pub x: f64,
    pub v: f64,
}

/// Valley dynamics with a polynomial height profile `h(x) = Σ c_k x^k`.
///
/// The default profile `(x² − 9)² / 100 + (x³/3 − 9x) / 60` has its floors
/// exactly at `x = ±3`, the right one deeper by 0.6, separated by a single
/// peak at `x = −5/12`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HillConfig {
    /// Coefficients `c_0, c_1, ...` of the height profile.
    pub profile: Vec<f64>,
    pub x_initial: f64,
    pub x_target: f64,
    pub timestep: f64,
    pub friction: f64,
    pub gravity: f64,
    pub action_bound: f64,
    pub position_bounds: [f64; 2],
    pub speed_bound: f64,
    pub discount: f64,
    /// Only `"euler"` (explicit Euler) is implemented.
    pub integrator: String,
}

impl Default for HillConfig {
    fn default() -> Self {
        Self {
            profile: vec![0.81, -0.15, -0.18, 1.0 / 180.0, 0.01],
            x_initial: -3.0,
            x_target: 3.0,
            timestep: 0.1,
            friction: 0.3,
            gravity: 5.0,
            action_bound: 2.0,
            position_bounds: [-6.0, 6.0],
            speed_bound: 10.0,
            discount: 0.99,
            integrator: "euler".into(),
        }
    }
}

impl HillConfig {
    pub fn height(&self, x: f64) -> f64 {
        self.profile.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.profile
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    }

    fn curvature(&self, x: f64) -> f64 {
        self.profile
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c)
    }

    /// Stationary point of `h` near `guess` (Newton on `h'`).
    pub fn stationary_point_near(&self, guess: f64) -> f64 {
        let mut x = guess;
        for _ in 0..100 {
            let step = self.slope(x) / self.curvature(x);
            x -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        x
    }
}

#[derive(Clone, Debug)]
pub struct Hill {
    config: HillConfig,
    reward_bound: f64,
}

pub fn make_hill(config: HillConfig) -> Result<Hill> {
    if config.integrator != "euler" {
        return Err(invalid(format!("unknown integrator `{}`", config.integrator)));
    }
    if config.profile.len() < 3 {
        return Err(invalid("hill profile must be at least quadratic"));
    }
    let [lo, hi] = config.position_bounds;
    if !(lo < hi) || !(lo..=hi).contains(&config.x_initial) || !(lo..=hi).contains(&config.x_target) {
        return Err(invalid("position bounds must contain the initial and target positions"));
    }
    if !(config.timestep > 0.0 && config.action_bound > 0.0 && config.speed_bound > 0.0) {
        return Err(invalid("timestep, action bound and speed bound must be positive"));
    }
    if !(0.0..1.0).contains(&config.discount) {
        return Err(invalid("discount must lie in [0, 1)"));
    }
    // dense scan of the box, endpoints included
    let mut candidates = vec![lo, hi];
    let n = 2000;
    for i in 0..=n {
        candidates.push(lo + (hi - lo) * i as f64 / n as f64);
    }
    let reward_bound = candidates
        .into_iter()
        .map(|x| config.height(x).abs())
        .fold(0.0, f64::max);
    Ok(Hill {
        config,
        reward_bound,
    })
}

impl Hill {
    pub fn config(&self) -> &HillConfig {
        &self.config
    }
}

impl Mdp for Hill {
    type State = HillState;
    type Action = f64;

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    fn initial_state(&self, _rng: &mut Rng) -> HillState {
        HillState {
            x: self.config.x_initial,
            v: 0.0,
        }
    }

    fn step(&self, state: &HillState, action: &f64, _rng: &mut Rng) -> Result<HillState> {
        let c = &self.config;
        let force = action.clamp(-c.action_bound, c.action_bound);
        let mut v = state.v + c.timestep * (force - c.gravity * c.slope(state.x) - c.friction * state.v);
        v = v.clamp(-c.speed_bound, c.speed_bound);
        let mut x = state.x + c.timestep * v;
        let [lo, hi] = c.position_bounds;
        if x <= lo || x >= hi {
            x = x.clamp(lo, hi);
            v = 0.0;
        }
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::EnvironmentContract(format!(
                "non-finite hill state from ({}, {}) under action {action}",
                state.x, state.v
            )));
        }
        Ok(HillState { x, v })
    }

    fn reward(&self, state: &HillState, _action: &f64) -> f64 {
        -self.config.height(state.x)
    }

    fn feature(&self, state: &HillState) -> Feature {
        [state.x, 0.0]
    }

    fn feature_dim(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_shape() {
        let cfg = HillConfig::default();
        let left = cfg.stationary_point_near(-3.0);
        let peak = cfg.stationary_point_near(0.0);
        let right = cfg.stationary_point_near(3.0);
        assert!(cfg.height(right) < cfg.height(left));
        assert!(cfg.height(peak) > cfg.height(left));
        assert!(cfg.curvature(left) > 0.0 && cfg.curvature(right) > 0.0 && cfg.curvature(peak) < 0.0);
        assert!((left + 3.0).abs() < 1e-12 && (right - 3.0).abs() < 1e-12);
        assert!((peak + 5.0 / 12.0).abs() < 1e-12);
        assert!((cfg.height(-3.0) - cfg.height(3.0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn nan_action_is_a_contract_violation() {
        let hill = make_hill(HillConfig::default()).unwrap();
        let mut rng = crate::rng::stream(0, 0);
        let s = hill.initial_state(&mut rng);
        // clamp keeps NaN, which then poisons the state
        assert!(matches!(hill.step(&s, &f64::NAN, &mut rng), Err(Error::EnvironmentContract(_))));
    }

    #[test]
    fn rejects_unknown_integrator() {
        let cfg = HillConfig {
            integrator: "rk4".into(),
            ..HillConfig::default()
        };
        assert!(make_hill(cfg).is_err());
    }
}
