//! Objective landscapes of the hill task over (gain, sigma), with and
//! without a state-entropy bonus.
//!
//! ```text
//! cargo run --release --example hill_landscape
//! ```

use pgx::analysis::{coherence_report, Axis, ComponentScan, DEFAULT_MARGIN};
use pgx::env::{make_hill, HillConfig};
use pgx::policy::ProportionalGaussianPolicy;
use pgx::shaping::{evaluate_shaped_objective, Binning, DensitySpec, IntrinsicBonus, ShapedObjective};

fn main() -> pgx::Result<()> {
    let hill = make_hill(HillConfig::default())?;
    let target = hill.config().x_target;
    let density = DensitySpec::Histogram {
        binning: Binning::Uniform {
            lo: -6.0,
            hi: 6.0,
            bins: 64,
        },
    };
    // Unit weight; the scan keeps components apart and reweights afterwards.
    let obj = ShapedObjective::new(&hill, vec![IntrinsicBonus::state_entropy(1.0, density)], 200, 189)?;
    let axes = vec![Axis::new("K", -2.0, 0.5, 21), Axis::new("sigma", 0.05, 4.05, 21)];
    let scan = ComponentScan::run(axes, 11, true, |theta, seed| {
        evaluate_shaped_objective(&obj, &ProportionalGaussianPolicy::new(theta[0], theta[1], target), seed)
    })?;

    let base = scan.extrinsic(DEFAULT_MARGIN)?;
    println!(
        "J: {} significant local maxima, best at {:?}",
        base.local_maxima.len(),
        base.theta(base.global_max)
    );
    for weight in [0.05, 0.1, 0.5, 1.0] {
        let shaped = scan.combined(&[weight], DEFAULT_MARGIN)?;
        let report = coherence_report(&base, &shaped, 1.0)?;
        println!(
            "lambda_s {weight:<4}: {} maxima, argmax {:?}, J gap {:.3} ± {:.3}",
            shaped.local_maxima.len(),
            shaped.theta(shaped.global_max),
            report.gap,
            report.gap_stderr
        );
    }
    Ok(())
}
