use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::num::num;

/// Two-sided 95% normal quantile used by every Wilson interval.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Reference gradients with a smaller norm make the sign test meaningless.
pub const REFERENCE_NORM_FLOOR: f64 = 1e-12;

/// A binomial proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(invalid("proportion needs 0 ≤ successes ≤ trials and trials ≥ 1"));
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Ok(Self {
            p,
            lo: (center - half).clamp(0.0, p),
            hi: (center + half).clamp(p, 1.0),
            successes,
            trials,
        })
    }
}

/// An improvement probability, undefined when the reference gradient vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Probability {
    Value(Proportion),
    Undefined,
}

impl Probability {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value(p) => Some(p.p),
            Self::Undefined => None,
        }
    }

    pub fn proportion(&self) -> Option<&Proportion> {
        match self {
            Self::Value(p) => Some(p),
            Self::Undefined => None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fraction of directions with `⟨d̂, ∇⟩ > 0`.
pub fn positive_fraction(directions: &[Vec<f64>], reference: &[f64]) -> Result<Probability> {
    if directions.is_empty() {
        return Err(invalid("need at least one direction draw"));
    }
    if let Some(d) = directions.iter().find(|d| d.len() != reference.len()) {
        return Err(invalid(format!(
            "direction dimension {} differs from reference dimension {}",
            d.len(),
            reference.len()
        )));
    }
    if dot(reference, reference).sqrt() < REFERENCE_NORM_FLOOR {
        return Ok(Probability::Undefined);
    }
    let successes = directions.iter().filter(|d| dot(d, reference) > 0.0).count();
    Ok(Probability::Value(Proportion::new(successes, directions.len())?))
}

/// How the reference gradients were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMethod {
    /// Exact dynamic programming on a finite MDP.
    Oracle,
    /// Average of many independent estimates.
    LargeSample,
}

/// `P(⟨d̂, ∇L⟩ > 0)` and `P(⟨d̂, ∇J⟩ > 0)` at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImprovementPoint {
    pub theta: Vec<f64>,
    pub p_d: Probability,
    pub p_g: Probability,
}

pub fn improvement_probability(
    theta: &[f64],
    directions: &[Vec<f64>],
    grad_l: &[f64],
    grad_j: &[f64],
) -> Result<ImprovementPoint> {
    Ok(ImprovementPoint {
        theta: theta.to_vec(),
        p_d: positive_fraction(directions, grad_l)?,
        p_g: positive_fraction(directions, grad_j)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImprovementProfile {
    pub points: Vec<ImprovementPoint>,
    pub reference: ReferenceMethod,
}

impl ImprovementProfile {
    /// `in_ball` is evaluated per point when a box is given.
    pub fn write_csv<W: Write>(&self, mut out: W, ball: Option<&[(f64, f64)]>) -> Result<()> {
        let dim = self.points.first().map_or(1, |p| p.theta.len());
        let mut header: Vec<String> = if dim == 1 {
            vec!["theta".into()]
        } else {
            (0..dim).map(|i| format!("theta{i}")).collect()
        };
        header.extend(
            ["p_D_pos", "p_D_lo", "p_D_hi", "p_G_pos", "p_G_lo", "p_G_hi", "in_ball"]
                .iter()
                .map(|s| s.to_string()),
        );
        writeln!(out, "{}", header.join(","))?;
        let fmt = |p: &Probability| match p {
            Probability::Value(v) => format!("{},{},{}", num(v.p), num(v.lo), num(v.hi)),
            Probability::Undefined => "undefined,undefined,undefined".into(),
        };
        for pt in &self.points {
            let theta: Vec<String> = pt.theta.iter().map(|t| num(*t)).collect();
            let inside = ball.is_some_and(|b| in_box(&pt.theta, b));
            writeln!(out, "{},{},{},{}", theta.join(","), fmt(&pt.p_d), fmt(&pt.p_g), inside)?;
        }
        Ok(())
    }
}

pub(crate) fn in_box(theta: &[f64], ball: &[(f64, f64)]) -> bool {
    const SLACK: f64 = 1e-9;
    theta
        .iter()
        .zip(ball)
        .all(|(t, (lo, hi))| *t >= lo.min(*hi) - SLACK && *t <= lo.max(*hi) + SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn always_positive_direction() {
        let dirs = vec![vec![1.0]; 20];
        let p = positive_fraction(&dirs, &[0.5]).unwrap();
        assert_eq!(p.value(), Some(1.0));
    }

    #[test]
    fn vanishing_reference_is_undefined() {
        let p = positive_fraction(&[vec![1.0, 2.0]], &[1e-13, 0.0]).unwrap();
        assert_eq!(p, Probability::Undefined);
    }

    proptest! {
        #[test]
        fn wilson_interval_is_valid(n in 1usize..2000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as usize;
            let p = Proportion::new(k, n).unwrap();
            prop_assert!(0.0 <= p.lo && p.lo <= p.p && p.p <= p.hi && p.hi <= 1.0);
        }
    }
}
