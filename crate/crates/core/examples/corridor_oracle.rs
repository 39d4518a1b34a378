//! Exact and sampled returns on the idle corridor.
//!
//! ```text
//! cargo run --release --example corridor_oracle
//! ```

use pgx::analysis::zero_reward_mass;
use pgx::env::{make_corridor, CorridorConfig};
use pgx::mdp::{discounted_return, exact_return, exact_visitation, sample_batch, Estimate, Mdp};
use pgx::policy::BernoulliPolicy;

fn main() -> pgx::Result<()> {
    let corridor = make_corridor(CorridorConfig::default())?;
    let mdp = corridor.mdp();
    println!("always-right return, closed form: {:.10}", corridor.always_right_return());

    println!("{:>6} {:>14} {:>17}", "theta", "J(theta)", "zero-reward mass");
    for theta in [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let policy = BernoulliPolicy::new(theta);
        let j = exact_return(mdp, &policy)?;
        let delta = zero_reward_mass(mdp, &policy)?.delta;
        println!("{theta:>6.2} {j:>14.6e} {delta:>17.4}");
    }

    let policy = BernoulliPolicy::new(0.9);
    let visitation = exact_visitation(mdp, &policy)?;
    println!("visitation mass at theta=0.9: {:.12}", visitation.total_mass());

    let trajectories = sample_batch(mdp, &policy, 20_000, 300, 7)?;
    let returns: Vec<f64> = trajectories.iter().map(|t| discounted_return(t, mdp.discount())).collect();
    let mc = Estimate::from_samples(&returns);
    println!(
        "theta=0.9: exact {:.4}, Monte Carlo {:.4} ± {:.4}",
        exact_return(mdp, &policy)?,
        mc.mean,
        mc.stderr
    );
    Ok(())
}
