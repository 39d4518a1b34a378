//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.
//!
//! ```text
//! cargo test --release --test acceptance -- --nocapture --test-threads 1
//! ```

use std::time::{Duration, Instant};

use pgx::analysis::{
    coherence_report, positive_fraction, scan_landscape, Axis, ComponentScan, LandscapeGrid, Probability,
    DEFAULT_MARGIN,
};
use pgx::env::{make_corridor, make_hill, Corridor, CorridorConfig, HillConfig};
use pgx::experiment::{execute, ExperimentConfig};
use pgx::learn::{estimate_direction, reinforce_extrinsic};
use pgx::mdp::{
    exact_policy_gradient, exact_return, exact_truncated_return, first_reward_probability, sample_batch, Estimate,
};
use pgx::policy::{BernoulliPolicy, ProportionalGaussianPolicy};
use pgx::rng;
use pgx::shaping::{
    evaluate_shaped_objective, exact_shaped_gradient, Binning, DensitySpec, IntrinsicBonus, ShapedObjective,
};
use serde_json::Value;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

fn corridor() -> Corridor {
    make_corridor(CorridorConfig::default()).unwrap()
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn report(criterion: u32, pass: bool, started: Instant, budget: Duration, detail: String) {
    let elapsed = started.elapsed();
    let ok = pass && elapsed < budget;
    println!(
        "criterion {criterion}: {} ({:.1} s of {} s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(pass, "criterion {criterion}: {detail}");
    assert!(elapsed < budget, "criterion {criterion}: runtime {elapsed:?} exceeds {budget:?}");
}

fn tiles() -> DensitySpec {
    DensitySpec::Histogram {
        binning: Binning::Discrete { lo: 1, count: 15 },
    }
}

#[test]
fn criterion_1_corridor_return_oracle() {
    let started = Instant::now();
    let c = corridor();
    let p = BernoulliPolicy::new(1.0);
    let closed = 100.0 * (0.3 * 0.99 / (1.0 - 0.7 * 0.99f64)).powi(14);
    let exact = exact_return(c.mdp(), &p).unwrap();
    let returns: Vec<f64> = sample_batch(c.mdp(), &p, 100_000, 300, 1)
        .unwrap()
        .iter()
        .map(|t| pgx::mdp::discounted_return(t, 0.99))
        .collect();
    let (mean, se) = mean_and_stderr(&returns);
    let pass = (exact - closed).abs() <= 1e-6 && (mean - exact).abs() <= 3.0 * se && (closed - 62.90).abs() < 0.005;
    report(
        1,
        pass,
        started,
        Duration::from_secs(10),
        format!("exact {exact:.9}, closed form {closed:.9}, Monte-Carlo {mean:.4} ± {se:.4}"),
    );
}

#[test]
fn criterion_2_corridor_pseudoconcavity() {
    let started = Instant::now();
    let c = corridor();
    let axes = vec![Axis::new("theta", 0.01, 0.99, 99)];
    let values: Vec<f64> = axes[0]
        .values()
        .iter()
        .map(|t| exact_return(c.mdp(), &BernoulliPolicy::new(*t)).unwrap())
        .collect();
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let grid = scan_landscape(axes, 0, true, DEFAULT_MARGIN, |t, _| {
        Ok(Estimate::exact(exact_return(c.mdp(), &BernoulliPolicy::new(t[0]))?))
    })
    .unwrap();
    let pass = increasing && grid.local_maxima.len() == 1;
    report(
        2,
        pass,
        started,
        Duration::from_secs(30),
        format!(
            "strictly increasing {increasing}, {} maxima at {:?}",
            grid.local_maxima.len(),
            grid.local_maxima.iter().map(|&m| grid.theta(m)).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_3_reinforce_unbiasedness() {
    let started = Instant::now();
    let c = corridor();
    let obj = ShapedObjective::new(c.mdp(), vec![], 8, 100).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (k, theta) in [0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
        let p = BernoulliPolicy::new(theta);
        let draws: Vec<f64> = (0..10_000)
            .map(|i| reinforce_extrinsic(&obj, &p, rng::derive(k as u64, i)).unwrap()[0])
            .collect();
        let (mean, se) = mean_and_stderr(&draws);
        let h = 1e-5;
        let jt = |t: f64| exact_truncated_return(c.mdp(), &BernoulliPolicy::new(t), 100);
        let oracle = (jt(theta + h) - jt(theta - h)) / (2.0 * h);
        pass &= (mean - oracle).abs() <= 4.0 * se;
        if se == 0.0 {
            let batch_hit = 1.0 - (1.0 - first_reward_probability(c.mdp(), &p, 100).unwrap()).powi(8);
            let all_zero = (1.0 - batch_hit).powi(draws.len() as i32);
            details.push(format!(
                "θ={theta}: every estimate is zero (probability {all_zero:.3}), oracle {oracle:.3e}"
            ));
        } else {
            details.push(format!("θ={theta}: z={:.2}", (mean - oracle) / se));
        }
    }
    report(3, pass, started, Duration::from_secs(120), details.join(", "));
}

#[test]
fn criterion_4_zero_gradient_event() {
    let started = Instant::now();
    let c = corridor();
    let obj = ShapedObjective::new(c.mdp(), vec![], 8, 100).unwrap();
    let p = BernoulliPolicy::new(0.1);
    let batches = 10_000;
    let zero = (0..batches)
        .filter(|&i| reinforce_extrinsic(&obj, &p, rng::derive(4, i)).unwrap().iter().all(|g| *g == 0.0))
        .count();
    let hit = first_reward_probability(c.mdp(), &p, 100).unwrap();
    let oracle = (1.0 - hit).powi(8);
    let fraction = zero as f64 / batches as f64;
    // Binomial standard error at the oracle probability.
    let se = (oracle * (1.0 - oracle) / batches as f64).sqrt();
    let pass = (fraction - oracle).abs() <= 3.0 * se;
    report(
        4,
        pass,
        started,
        Duration::from_secs(60),
        format!("zero fraction {fraction}, oracle {oracle:.15} (per-history hit {hit:.3e}), se {se:.3e}"),
    );
}

/// Fraction of `M` directions of `obj` that agree with `reference`; a
/// reference below the norm floor is replaced by its sign.
fn improvement(
    obj: &ShapedObjective<pgx::mdp::FiniteMdp>,
    p: &BernoulliPolicy,
    reference: f64,
    m: usize,
    seed: u64,
) -> f64 {
    let directions: Vec<Vec<f64>> = (0..m)
        .map(|k| estimate_direction(obj, p, rng::derive(seed, k as u64)).unwrap().0.direction)
        .collect();
    match positive_fraction(&directions, &[reference]).unwrap() {
        Probability::Value(v) => v.p,
        Probability::Undefined => positive_fraction(&directions, &[reference.signum()])
            .unwrap()
            .value()
            .expect("unit reference"),
    }
}

#[test]
fn criterion_5_efficiency_ordering() {
    let started = Instant::now();
    let c = corridor();
    let mdp = c.mdp();
    let ls_bonus = vec![IntrinsicBonus::state_entropy(0.2, tiles())];
    let ls = ShapedObjective::new(mdp, ls_bonus.clone(), 8, 100).unwrap();
    let j = ShapedObjective::new(mdp, vec![], 8, 100).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (i, theta) in [0.05, 0.1, 0.15, 0.2].into_iter().enumerate() {
        let p = BernoulliPolicy::new(theta);
        let grad_ls = exact_shaped_gradient(mdp, &p, &ls_bonus, 1e-5).unwrap()[0];
        let grad_j = exact_policy_gradient(mdp, &p).unwrap()[0];
        let mut wins = 0;
        let mut cells = Vec::new();
        for seed in 0..5u64 {
            let point_seed = rng::derive(rng::derive(seed, 5), i as u64);
            let d = improvement(&ls, &p, grad_ls, 500, rng::derive(point_seed, 0));
            let g = improvement(&j, &p, grad_j, 500, rng::derive(point_seed, 1));
            if d > g {
                wins += 1;
            }
            cells.push(format!("{d:.3}/{g:.3}"));
        }
        pass &= wins == 5;
        details.push(format!("θ={theta}: {wins}/5 [{}]", cells.join(" ")));
    }
    report(5, pass, started, Duration::from_secs(300), details.join("; "));
}

#[test]
fn criterion_6_hill_landscape() {
    let started = Instant::now();
    let hill = make_hill(HillConfig::default()).unwrap();
    let target = hill.config().x_target;
    let density = DensitySpec::Histogram {
        binning: Binning::Uniform {
            lo: -6.0,
            hi: 6.0,
            bins: 64,
        },
    };
    let obj = ShapedObjective::new(&hill, vec![IntrinsicBonus::state_entropy(1.0, density)], 400, 189).unwrap();
    let axes = vec![Axis::new("K", -2.0, 0.5, 41), Axis::new("sigma", 0.05, 4.05, 41)];
    let scan = ComponentScan::run(axes, 11, true, |theta, seed| {
        evaluate_shaped_objective(&obj, &ProportionalGaussianPolicy::new(theta[0], theta[1], target), seed)
    })
    .unwrap();
    let base = scan.extrinsic(DEFAULT_MARGIN).unwrap();
    let sweep = [0.05, 0.1, 0.5, 1.0];
    let shaped: Vec<LandscapeGrid> = sweep.iter().map(|w| scan.combined(&[*w], DEFAULT_MARGIN).unwrap()).collect();
    let reports: Vec<_> = shaped.iter().map(|g| coherence_report(&base, g, 1.0).unwrap()).collect();
    let single = shaped.iter().any(|g| g.local_maxima.len() == 1);
    let monotone = reports
        .windows(2)
        .all(|w| w[1].gap >= w[0].gap - w[0].gap_stderr.max(w[1].gap_stderr));
    let pass = base.local_maxima.len() >= 2 && single && monotone;
    let sweep_detail: Vec<String> = sweep
        .iter()
        .zip(shaped.iter().zip(&reports))
        .map(|(w, (g, r))| format!("λ_s={w}: {} maxima, gap {:.3} ± {:.3}", g.local_maxima.len(), r.gap, r.gap_stderr))
        .collect();
    report(
        6,
        pass,
        started,
        Duration::from_secs(900),
        format!("J has {} maxima; {}", base.local_maxima.len(), sweep_detail.join(", ")),
    );
}

fn bundled(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(format!("{CONFIGS}/{name}.toml")).unwrap()
}

fn artifact_json(config: &ExperimentConfig, name: &str) -> Value {
    let artifacts = execute(config).unwrap();
    let artifact = artifacts.iter().find(|a| a.name == name).unwrap();
    serde_json::from_slice(&artifact.bytes).unwrap()
}

fn median_return(train: &Value, objective: &str) -> f64 {
    train["objectives"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["name"] == objective)
        .unwrap()["median_final_return"]
        .as_f64()
        .unwrap()
}

#[test]
fn criterion_7_dense_maze_training() {
    let started = Instant::now();
    let mut config = bundled("maze_fig5");
    config.objectives.retain(|o| o.name == "J");
    let train = artifact_json(&config, "train.json");
    let median = median_return(&train, "J");
    report(
        7,
        median > 0.0,
        started,
        Duration::from_secs(900),
        format!("median final return of J over 5 seeds {median:.3}, idle return 0"),
    );
}

#[test]
fn criterion_8_sparse_maze_separation() {
    let started = Instant::now();
    let mut train_config = bundled("maze_fig6");
    train_config.objectives.retain(|o| o.name == "J" || o.name == "Ls");
    let train = artifact_json(&train_config, "train.json");
    let (ls, j) = (median_return(&train, "Ls"), median_return(&train, "J"));

    let mut freq_config = bundled("maze_fig7");
    let spec = freq_config.frequency.as_mut().unwrap();
    spec.checkpoints = vec![0];
    spec.train_with = None;
    spec.scores.clear();
    let freq = artifact_json(&freq_config, "frequency.json");
    let at_init = |name: &str| {
        freq["results"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["direction"] == name && r["checkpoint"] == 0)
            .unwrap()["frequency"]["p"]
            .as_f64()
            .unwrap()
    };
    let (f_ls, f_j) = (at_init("Ls"), at_init("J"));
    let pass = ls > j && f_ls > f_j;
    report(
        8,
        pass,
        started,
        Duration::from_secs(2700),
        format!("median final return Ls {ls:.3} vs J {j:.3}; improvement frequency at init Ls {f_ls:.2} vs J {f_j:.2}"),
    );
}

#[test]
fn criterion_9_property_suites() {
    use pgx::analysis::LandscapeGrid as Grid;
    use pgx::mdp::{check_normalized, exact_visitation, FiniteMdp};
    use pgx::policy::{CategoricalMlpPolicy, Policy};
    use pgx::shaping::fit_gmm;
    use rand::Rng as _;

    let started = Instant::now();
    let mut r = rng::stream(9, 0);
    let mut failures: Vec<&str> = Vec::new();

    // Score identity: E[∇log π] = 0.
    let p = BernoulliPolicy::new(0.3);
    let scores: Vec<f64> = (0..100_000)
        .map(|_| {
            let a = Policy::<usize>::sample(&p, &0, &mut r);
            Policy::<usize>::grad_log_prob(&p, &0, &a)[0]
        })
        .collect();
    let (mean, se) = mean_and_stderr(&scores);
    if mean.abs() > 4.0 * se {
        failures.push("score identity");
    }

    // Closed-form scores against five-point differences.
    let five = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    };
    let closed_ok = (0..200).all(|_| {
        let (gain, sigma, x) = (r.gen_range(-2.0..0.5), r.gen_range(0.5..3.0), r.gen_range(-6.0..6.0));
        let s = pgx::env::HillState { x, v: 0.0 };
        let g = ProportionalGaussianPolicy::new(gain, sigma, 3.0);
        let a = g.mean(&s) + r.gen_range(-3.0..3.0) * sigma;
        let analytic = g.grad_log_prob(&s, &a);
        let dk = five(&|k| ProportionalGaussianPolicy::new(k, sigma, 3.0).log_prob(&s, &a), gain, 1e-4);
        let ds = five(&|sd| ProportionalGaussianPolicy::new(gain, sd, 3.0).log_prob(&s, &a), sigma, 1e-4);
        let theta = r.gen_range(0.1..0.9);
        let b = BernoulliPolicy::new(theta);
        let db = five(&|t| Policy::<usize>::log_prob(&BernoulliPolicy::new(t), &0, &1), theta, 1e-4);
        (analytic[0] - dk).abs() <= 1e-10
            && (analytic[1] - ds).abs() <= 1e-10
            && (Policy::<usize>::grad_log_prob(&b, &0, &1)[0] - db).abs() <= 1e-10
    });
    if !closed_ok {
        failures.push("closed-form finite differences");
    }

    // MLP scores against central differences, norm-wise relative.
    let maze = pgx::env::make_grid_maze(pgx::env::GridMazeConfig::new(
        pgx::env::LayoutName::Empty8x8,
        pgx::env::RewardMode::Sparse,
    ))
    .unwrap();
    let inputs = std::sync::Arc::new(maze.network_inputs());
    let mlp_ok = (0..5).all(|_| {
        let net = CategoricalMlpPolicy::new(inputs.clone(), 4, r.gen());
        let (s, a) = (r.gen_range(0..inputs.len()), r.gen_range(0..4));
        let g = net.grad_log_prob(&s, &a);
        let (mut err, mut norm) = (0.0, 0.0);
        for _ in 0..100 {
            let i = r.gen_range(0..g.len());
            let mut plus = net.params().to_vec();
            let mut minus = plus.clone();
            plus[i] += 1e-5;
            minus[i] -= 1e-5;
            let fd = (net.with_params(&plus).log_prob(&s, &a) - net.with_params(&minus).log_prob(&s, &a)) / 2e-5;
            err += (g[i] - fd).powi(2);
            norm += g[i].powi(2);
        }
        err.sqrt() <= 1e-5 * norm.sqrt()
    });
    if !mlp_ok {
        failures.push("MLP finite differences");
    }

    // Visitation normalization on random chains.
    let normalized = (0..50).all(|_| {
        let n = r.gen_range(2..8);
        let transitions: Vec<Vec<(usize, f64)>> = (0..2 * n)
            .map(|_| {
                let row: Vec<f64> = (0..n).map(|_| r.gen_range(0.001..1.0)).collect();
                let total: f64 = row.iter().sum();
                row.iter().enumerate().map(|(j, x)| (j, x / total)).collect()
            })
            .collect();
        let mut initial = vec![0.0; n];
        initial[0] = 1.0;
        let mdp = FiniteMdp::new(n, 2, initial, transitions, vec![0.0; 2 * n], r.gen_range(0.5..0.995)).unwrap();
        check_normalized(&exact_visitation(&mdp, &BernoulliPolicy::new(r.gen())).unwrap(), 1e-9)
    });
    if !normalized {
        failures.push("visitation normalization");
    }

    // EM log-likelihood never decreases.
    let em_ok = (0..10).all(|k| {
        let samples: Vec<Vec<f64>> = (0..150)
            .map(|i| vec![(i % 3) as f64 * 4.0 + r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
            .collect();
        let gmm = fit_gmm(&samples, 3, k).unwrap();
        gmm.log_likelihood_trace().windows(2).all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0))
    });
    if !em_ok {
        failures.push("EM monotone log-likelihood");
    }

    // Zero weights are bit-identical to the return; reruns are bit-identical.
    let c = corridor();
    let zero = ShapedObjective::new(
        c.mdp(),
        vec![IntrinsicBonus::action_entropy(0.0), IntrinsicBonus::state_entropy(0.0, tiles())],
        8,
        100,
    )
    .unwrap();
    let plain = zero.unshaped();
    let q = BernoulliPolicy::new(0.8);
    let neutral = (0..20).all(|seed| {
        estimate_direction(&zero, &q, seed).unwrap().0.direction == reinforce_extrinsic(&plain, &q, seed).unwrap()
            && evaluate_shaped_objective(&zero, &q, seed).unwrap().l().mean.to_bits()
                == evaluate_shaped_objective(&plain, &q, seed).unwrap().l().mean.to_bits()
    });
    if !neutral {
        failures.push("zero-weight neutrality");
    }
    let deterministic = (0..20).all(|seed| {
        sample_batch(c.mdp(), &q, 8, 100, seed).unwrap() == sample_batch(c.mdp(), &q, 8, 100, seed).unwrap()
    });
    if !deterministic {
        failures.push("seed determinism");
    }

    // Ω(ε) grows with ε.
    let omega_ok = (0..50).all(|_| {
        let cells: Vec<Estimate> = (0..25).map(|_| Estimate::exact(r.gen_range(-5.0..5.0))).collect();
        let grid = Grid::from_estimates(vec![Axis::new("a", 0.0, 1.0, 5), Axis::new("b", 0.0, 1.0, 5)], cells, 2.0)
            .unwrap();
        let (e1, e2) = {
            let a: f64 = r.gen_range(0.0..5.0);
            (a, a + r.gen_range(0.0..5.0))
        };
        grid.omega(e1).iter().zip(grid.omega(e2)).all(|(small, large)| !small || large)
    });
    if !omega_ok {
        failures.push("Ω monotonicity");
    }

    let detail = if failures.is_empty() {
        "all property suites hold".to_string()
    } else {
        format!("failing: {}", failures.join(", "))
    };
    report(9, failures.is_empty(), started, Duration::from_secs(300), detail);
}
