//! REINFORCE estimates of the return gradient against the exact gradient.
//!
//! ```text
//! cargo run --release --example reinforce_gradient
//! ```

use pgx::env::{make_corridor, CorridorConfig};
use pgx::learn::reinforce_extrinsic;
use pgx::mdp::{exact_policy_gradient, exact_truncated_return, Estimate};
use pgx::policy::BernoulliPolicy;
use pgx::rng;
use pgx::shaping::ShapedObjective;

fn main() -> pgx::Result<()> {
    let corridor = make_corridor(CorridorConfig::default())?;
    let obj = ShapedObjective::new(corridor.mdp(), vec![], 8, 100)?;
    let draws = 2_000;
    let h = 1e-5;
    println!(
        "{:>6} {:>12} {:>12} {:>22} {:>10}",
        "theta", "dJ", "dJ_T", "mean of estimates", "P(g = 0)"
    );
    for theta in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let policy = BernoulliPolicy::new(theta);
        let exact = exact_policy_gradient(corridor.mdp(), &policy)?[0];
        let truncated = |t: f64| exact_truncated_return(corridor.mdp(), &BernoulliPolicy::new(t), obj.horizon);
        let fd = (truncated(theta + h) - truncated(theta - h)) / (2.0 * h);
        let samples: Vec<f64> = (0..draws)
            .map(|i| Ok(reinforce_extrinsic(&obj, &policy, rng::derive(3, i))?[0]))
            .collect::<pgx::Result<_>>()?;
        let zeros = samples.iter().filter(|g| **g == 0.0).count() as f64 / draws as f64;
        let est = Estimate::from_samples(&samples);
        println!(
            "{theta:>6.2} {exact:>12.4} {fd:>12.4} {:>12.4} ± {:>7.4} {zeros:>10.3}",
            est.mean, est.stderr
        );
    }
    // dJ is the infinite-horizon gradient; the T = 100 estimator is unbiased
    // for dJ_T, the gradient of the truncated return.
    Ok(())
}
