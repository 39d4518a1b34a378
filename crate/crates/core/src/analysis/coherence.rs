use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mdp::Estimate;

use super::landscape::LandscapeGrid;

/// Return lost by maximizing the shaped objective instead of the return.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub theta_star: Vec<f64>,
    pub theta_dagger: Vec<f64>,
    pub j_star: Estimate,
    pub j_at_dagger: Estimate,
    /// `Ĵ(θ*) − Ĵ(θ†)`
    pub gap: f64,
    pub gap_stderr: f64,
    pub epsilon: f64,
    pub coherent: bool,
    pub dagger_in_omega: bool,
}

pub fn coherence_report(base: &LandscapeGrid, shaped: &LandscapeGrid, epsilon: f64) -> Result<CoherenceReport> {
    if base.axes != shaped.axes {
        return Err(invalid("coherence needs both landscapes on the same axes"));
    }
    let star = base.global_max;
    let dagger = shaped.global_max;
    let j_star = base.cells[star];
    let j_at_dagger = base.cells[dagger];
    let (gap, gap_stderr) = if star == dagger {
        (0.0, 0.0)
    } else {
        (
            j_star.mean - j_at_dagger.mean,
            (j_star.stderr.powi(2) + j_at_dagger.stderr.powi(2)).sqrt(),
        )
    };
    Ok(CoherenceReport {
        theta_star: base.theta(star),
        theta_dagger: shaped.theta(dagger),
        j_star,
        j_at_dagger,
        gap,
        gap_stderr,
        epsilon,
        coherent: gap <= epsilon,
        dagger_in_omega: base.omega(epsilon)[dagger],
    })
}
