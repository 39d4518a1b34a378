use serde::Serialize;

use crate::error::{invalid, Result};

use super::improvement::{in_box, ImprovementProfile};

/// Minimum improvement probabilities over the profile and over a box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyReport {
    /// `min P̂(D > 0)` over every profiled point with a defined value.
    pub delta_efficiency: Option<f64>,
    /// `min P̂(G > 0)` over profiled points inside the box.
    pub delta_attraction: Option<f64>,
    pub ball: Vec<(f64, f64)>,
    pub points_in_ball: usize,
    pub undefined_points: usize,
}

/// Axis-aligned box spanned by two parameter vectors.
pub fn ball_between(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().zip(b).map(|(x, y)| (x.min(*y), x.max(*y))).collect()
}

pub fn efficiency_attraction_report(profile: &ImprovementProfile, ball: &[(f64, f64)]) -> Result<EfficiencyReport> {
    let dim = ball.len();
    if profile.points.is_empty() || profile.points.iter().any(|p| p.theta.len() != dim) {
        return Err(invalid("profile and box dimensions disagree"));
    }
    for (i, (lo, hi)) in ball.iter().enumerate() {
        let min = profile.points.iter().map(|p| p.theta[i]).fold(f64::INFINITY, f64::min);
        let max = profile.points.iter().map(|p| p.theta[i]).fold(f64::NEG_INFINITY, f64::max);
        if *lo < min - 1e-9 || *hi > max + 1e-9 {
            return Err(invalid(format!(
                "box [{lo}, {hi}] on axis {i} is not covered by the profile range [{min}, {max}]"
            )));
        }
    }
    let inside: Vec<_> = profile.points.iter().filter(|p| in_box(&p.theta, ball)).collect();
    if inside.is_empty() {
        return Err(invalid("no profiled point lies inside the box"));
    }
    let min_of = |vals: Vec<Option<f64>>| vals.into_iter().flatten().reduce(f64::min);
    let undefined = profile
        .points
        .iter()
        .filter(|p| p.p_d.value().is_none() || p.p_g.value().is_none())
        .count();
    Ok(EfficiencyReport {
        delta_efficiency: min_of(profile.points.iter().map(|p| p.p_d.value()).collect()),
        delta_attraction: min_of(inside.iter().map(|p| p.p_g.value()).collect()),
        ball: ball.to_vec(),
        points_in_ball: inside.len(),
        undefined_points: undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::improvement::{ImprovementPoint, Probability, Proportion, ReferenceMethod};

    fn point(t: f64, d: usize, g: usize) -> ImprovementPoint {
        ImprovementPoint {
            theta: vec![t],
            p_d: Probability::Value(Proportion::new(d, 10).unwrap()),
            p_g: Probability::Value(Proportion::new(g, 10).unwrap()),
        }
    }

    #[test]
    fn constant_profile_gives_one() {
        let profile = ImprovementProfile {
            points: (0..5).map(|i| point(i as f64 / 4.0, 10, 10)).collect(),
            reference: ReferenceMethod::Oracle,
        };
        let r = efficiency_attraction_report(&profile, &[(0.25, 0.75)]).unwrap();
        assert_eq!(r.delta_efficiency, Some(1.0));
        assert_eq!(r.delta_attraction, Some(1.0));
        assert_eq!(r.points_in_ball, 3);
    }

    #[test]
    fn degenerate_box_uses_the_single_point() {
        let profile = ImprovementProfile {
            points: vec![point(0.0, 9, 1), point(0.5, 7, 3), point(1.0, 8, 8)],
            reference: ReferenceMethod::Oracle,
        };
        let r = efficiency_attraction_report(&profile, &ball_between(&[0.5], &[0.5])).unwrap();
        assert_eq!(r.delta_attraction, Some(0.3));
        assert_eq!(r.delta_efficiency, Some(0.7));
    }

    #[test]
    fn uncovered_box_is_rejected() {
        let profile = ImprovementProfile {
            points: vec![point(0.0, 1, 1), point(0.5, 1, 1)],
            reference: ReferenceMethod::Oracle,
        };
        assert!(efficiency_attraction_report(&profile, &[(0.2, 0.9)]).is_err());
    }
}
