//! State-density estimators: a Gaussian mixture on two point clouds and a
//! discounted visitation histogram on the corridor.
//!
//! ```text
//! cargo run --release --example density_estimation
//! ```

use pgx::env::{make_corridor, CorridorConfig};
use pgx::mdp::{sample_batch, Mdp};
use pgx::policy::BernoulliPolicy;
use pgx::rng;
use pgx::shaping::{fit_gmm, fit_visitation_histogram, Binning};
use rand_distr::{Distribution, Normal};

fn main() -> pgx::Result<()> {
    let mut rng = rng::stream(5, 0);
    let noise = Normal::new(0.0, 0.3).expect("valid deviation");
    let samples: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let center = if i % 2 == 0 { -2.0 } else { 3.0 };
            vec![center + noise.sample(&mut rng), noise.sample(&mut rng)]
        })
        .collect();
    let gmm = fit_gmm(&samples, 2, 1)?;
    println!("mixture after {} EM iterations", gmm.log_likelihood_trace().len());
    for (w, m) in gmm.weights().iter().zip(gmm.means()) {
        println!("  weight {w:.3} mean ({:.3}, {:.3})", m[0], m[1]);
    }
    println!("log density at the origin: {:.3}", gmm.log_density(&[0.0, 0.0]));

    let corridor = make_corridor(CorridorConfig::default())?;
    let mdp = corridor.mdp();
    let trajectories = sample_batch(mdp, &BernoulliPolicy::new(0.6), 64, 100, 2)?;
    let histogram = fit_visitation_histogram(&trajectories, mdp.discount(), |s| mdp.feature(s), Binning::Discrete {
        lo: 1,
        count: 15,
    })?;
    println!("corridor visitation histogram (floor {:.2e}):", histogram.floor());
    print!("{}", histogram.dump());
    Ok(())
}
