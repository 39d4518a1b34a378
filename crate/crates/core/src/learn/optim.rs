use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Sga,
    Adam,
}

/// Ascent optimizer. Adam moments are sized on the first update.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub rule: Rule,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub steps: u64,
}

impl OptimizerState {
    pub fn new(rule: Rule, step_size: f64) -> Self {
        Self {
            rule,
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
            steps: 0,
        }
    }

    pub fn sga(step_size: f64) -> Self {
        Self::new(Rule::Sga, step_size)
    }

    pub fn adam(step_size: f64) -> Self {
        Self::new(Rule::Adam, step_size)
    }

    /// Returns `θ'` for the ascent direction `d̂`. A non-finite direction or
    /// result is rejected and leaves the state untouched.
    pub fn update(&mut self, theta: &[f64], direction: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != direction.len() {
            return Err(invalid(format!(
                "direction has {} entries, parameters have {}",
                direction.len(),
                theta.len()
            )));
        }
        if let Some(i) = direction.iter().position(|d| !d.is_finite()) {
            return Err(Error::UpdateRejected(format!(
                "direction entry {i} is {} at step {}",
                direction[i], self.steps
            )));
        }
        let next = match self.rule {
            Rule::Sga => {
                let next: Vec<f64> = theta.iter().zip(direction).map(|(t, d)| t + self.step_size * d).collect();
                self.check(&next)?;
                next
            }
            Rule::Adam => {
                if self.m.is_empty() {
                    self.m = vec![0.0; theta.len()];
                    self.v = vec![0.0; theta.len()];
                } else if self.m.len() != theta.len() {
                    return Err(invalid("optimizer moments do not match the parameter dimension"));
                }
                let t = (self.steps + 1) as i32;
                let (b1, b2) = (self.beta1, self.beta2);
                let m: Vec<f64> = self.m.iter().zip(direction).map(|(m, g)| b1 * m + (1.0 - b1) * g).collect();
                let v: Vec<f64> = self.v.iter().zip(direction).map(|(v, g)| b2 * v + (1.0 - b2) * g * g).collect();
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                let next: Vec<f64> = theta
                    .iter()
                    .zip(m.iter().zip(&v))
                    .map(|(th, (m, v))| th + self.step_size * (m / c1) / ((v / c2).sqrt() + self.epsilon))
                    .collect();
                self.check(&next)?;
                self.m = m;
                self.v = v;
                next
            }
        };
        self.steps += 1;
        Ok(next)
    }

    fn check(&self, next: &[f64]) -> Result<()> {
        match next.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::UpdateRejected(format!(
                "parameter {i} became {} at step {}",
                next[i], self.steps
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sga_arithmetic() {
        let mut opt = OptimizerState::sga(0.1);
        let next = opt.update(&[1.0], &[2.0]).unwrap();
        assert!((next[0] - 1.2).abs() < 1e-15);
        assert_eq!(opt.steps, 1);
    }

    #[test]
    fn zero_direction_is_a_fixed_point() {
        for mut opt in [OptimizerState::sga(0.5), OptimizerState::adam(0.5)] {
            assert_eq!(opt.update(&[0.3, -2.0], &[0.0, 0.0]).unwrap(), vec![0.3, -2.0]);
        }
    }

    #[test]
    fn adam_first_step_is_signed_step_size() {
        let mut opt = OptimizerState::adam(5e-4);
        let g = [3.0, -0.01, 1e4];
        let next = opt.update(&[0.0; 3], &g).unwrap();
        for (x, gi) in next.iter().zip(g) {
            // m̂ = g, v̂ = g², so the step is α·g/(|g| + ε)
            let expected = 5e-4 * gi / (gi.abs() + 1e-8);
            assert!((x - expected).abs() < 1e-15);
            assert!((x.abs() - 5e-4).abs() < 5e-4 * 1e-6);
        }
    }

    #[test]
    fn non_finite_direction_is_rejected() {
        let mut opt = OptimizerState::adam(0.1);
        assert!(matches!(opt.update(&[0.0], &[f64::NAN]), Err(Error::UpdateRejected(_))));
        assert_eq!(opt.steps, 0);
        assert!(opt.m.is_empty());
    }
}
