//! How often a stochastic ascent direction points uphill on the return,
//! with and without entropy bonuses.
//!
//! ```text
//! cargo run --release --example improvement_profile
//! ```

use pgx::analysis::improvement_probability;
use pgx::env::{make_corridor, CorridorConfig};
use pgx::learn::estimate_direction;
use pgx::mdp::exact_policy_gradient;
use pgx::policy::BernoulliPolicy;
use pgx::rng;
use pgx::shaping::{exact_shaped_gradient, Binning, DensitySpec, IntrinsicBonus, ShapedObjective};

fn show(p: &pgx::analysis::Probability) -> String {
    match p.proportion() {
        Some(v) => format!("{:.3} [{:.3}, {:.3}]", v.p, v.lo, v.hi),
        None => "undefined".into(),
    }
}

fn main() -> pgx::Result<()> {
    let corridor = make_corridor(CorridorConfig::default())?;
    let mdp = corridor.mdp();
    let histogram = DensitySpec::Histogram {
        binning: Binning::Discrete { lo: 1, count: 15 },
    };
    let objectives = [
        ("J", vec![]),
        ("La", vec![IntrinsicBonus::action_entropy(0.05)]),
        ("Ls", vec![IntrinsicBonus::state_entropy(0.2, histogram)]),
    ];
    let directions = 500;
    for (name, bonuses) in objectives {
        let obj = ShapedObjective::new(mdp, bonuses.clone(), 8, 100)?;
        println!("{name}: P(<d, grad L> > 0) and P(<d, grad J> > 0)");
        for theta in [0.1, 0.2, 0.4, 0.8] {
            let policy = BernoulliPolicy::new(theta);
            let grad_j = exact_policy_gradient(mdp, &policy)?;
            let grad_l = if bonuses.is_empty() {
                grad_j.clone()
            } else {
                exact_shaped_gradient(mdp, &policy, &bonuses, 1e-5)?
            };
            let draws: Vec<Vec<f64>> = (0..directions)
                .map(|m| Ok(estimate_direction(&obj, &policy, rng::derive(11, m))?.0.direction))
                .collect::<pgx::Result<_>>()?;
            let point = improvement_probability(&[theta], &draws, &grad_l, &grad_j)?;
            println!("  theta {theta:.1}: D {}  G {}", show(&point.p_d), show(&point.p_g));
        }
    }
    Ok(())
}
