use std::sync::Arc;

use pgx::env::{make_grid_maze, GridMazeConfig, HillState, LayoutName, RewardMode};
use pgx::policy::bernoulli::{LEFT, RIGHT};
use pgx::policy::{BernoulliPolicy, CategoricalMlpPolicy, Policy, ProportionalGaussianPolicy};
use pgx::rng;
use proptest::prelude::*;
use rand::Rng as _;

fn maze_policy(seed: u64) -> CategoricalMlpPolicy {
    let maze = make_grid_maze(GridMazeConfig::new(LayoutName::Empty8x8, RewardMode::Sparse)).unwrap();
    CategoricalMlpPolicy::new(Arc::new(maze.network_inputs()), 4, seed)
}

/// Five-point central difference.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Per-coordinate mean of `draws` scores `∇log π(a|s)`, `a ~ π(·|s)`, with its
/// standard errors.
fn mean_score<S, P: Policy<S>>(policy: &P, state: &S, draws: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut r = rng::stream(seed, 0);
    let dim = policy.params().len();
    let mut sum = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    for _ in 0..draws {
        let a = policy.sample(state, &mut r);
        for (i, g) in policy.grad_log_prob(state, &a).into_iter().enumerate() {
            sum[i] += g;
            sq[i] += g * g;
        }
    }
    let n = draws as f64;
    sum.iter()
        .zip(&sq)
        .map(|(s, q)| {
            let mean = s / n;
            let var = (q / n - mean * mean).max(0.0) * n / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

#[test]
fn score_identity_bernoulli() {
    for theta in [0.2, 0.5, 0.9] {
        let (mean, se) = mean_score(&BernoulliPolicy::new(theta), &0usize, 100_000, 1)[0];
        assert!(mean.abs() <= 4.0 * se, "θ={theta}: {mean} ± {se}");
    }
}

#[test]
fn score_identity_gaussian() {
    let p = ProportionalGaussianPolicy::new(-0.7, 1.3, 3.0);
    let s = HillState { x: -2.5, v: 0.4 };
    for (i, (mean, se)) in mean_score(&p, &s, 100_000, 2).into_iter().enumerate() {
        assert!(mean.abs() <= 4.0 * se, "coordinate {i}: {mean} ± {se}");
    }
}

#[test]
fn score_identity_mlp() {
    let p = maze_policy(5);
    let scores = mean_score(&p, &17usize, 100_000, 3);
    // Coordinates with exactly zero score (dead units) are skipped.
    let mut failures = 0;
    let mut checked = 0;
    for (mean, se) in scores {
        if se == 0.0 {
            assert_eq!(mean, 0.0);
            continue;
        }
        checked += 1;
        if mean.abs() > 4.0 * se {
            failures += 1;
        }
    }
    // Thousands of coordinates: a 4σ excursion has probability 6e-5 each.
    assert!(checked > 100);
    assert!(failures as f64 <= 1e-3 * checked as f64 + 1.0, "{failures} of {checked}");
}

#[test]
fn bernoulli_values() {
    let one = BernoulliPolicy::new(1.0);
    let mut r = rng::stream(0, 0);
    assert!((0..1000).all(|_| Policy::<usize>::sample(&one, &0, &mut r) == RIGHT));
    let half = BernoulliPolicy::new(0.5);
    for a in [LEFT, RIGHT] {
        assert!((Policy::<usize>::log_prob(&half, &0, &a) - 0.5f64.ln()).abs() < 1e-15);
    }
    assert_eq!(Policy::<usize>::grad_log_prob(&half, &0, &RIGHT), vec![2.0]);
    assert_eq!(Policy::<usize>::log_prob(&one, &0, &LEFT), BernoulliPolicy::THETA_MIN.ln());
}

#[test]
fn gaussian_values() {
    let sigma = 0.8;
    let p = ProportionalGaussianPolicy::new(-0.4, sigma, 3.0);
    let at_target = HillState { x: 3.0, v: 0.0 };
    let mut r = rng::stream(4, 0);
    let n = 100_000;
    let mean = (0..n).map(|_| p.sample(&at_target, &mut r)).sum::<f64>() / n as f64;
    assert!(mean.abs() <= 3.0 * sigma / (n as f64).sqrt());

    let s = HillState { x: -1.0, v: 0.0 };
    let mu = p.mean(&s);
    let apex = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    assert!((p.log_prob(&s, &mu) - apex).abs() < 1e-14);
    let a = 0.9;
    let expected = (a - mu) * (s.x - 3.0) / (sigma * sigma);
    assert!((p.grad_log_prob(&s, &a)[0] - expected).abs() < 1e-14);
}

#[test]
fn zero_output_layer_samples_uniformly() {
    let p = maze_policy(2).with_zero_output_layer();
    let mut r = rng::stream(6, 0);
    let n = 10_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[p.sample(&30, &mut r)] += 1;
    }
    let se = (0.25 * 0.75 / n as f64).sqrt();
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() <= 3.0 * se, "{counts:?}");
    }
}

#[test]
fn mlp_probabilities_are_normalized() {
    let mut r = rng::stream(7, 0);
    for _ in 0..100 {
        let p = maze_policy(r.gen());
        let s = r.gen_range(0..p.inputs().len());
        let total: f64 = (0..4).map(|a| p.log_prob(&s, &a).exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bernoulli_score_matches_finite_differences(theta in 0.1f64..0.9, right in any::<bool>()) {
        let a = if right { RIGHT } else { LEFT };
        let p = BernoulliPolicy::new(theta);
        let fd = derivative(|t| Policy::<usize>::log_prob(&BernoulliPolicy::new(t), &0, &a), theta, 1e-4);
        prop_assert!((Policy::<usize>::grad_log_prob(&p, &0, &a)[0] - fd).abs() <= 1e-10);
    }

    #[test]
    fn gaussian_score_matches_finite_differences(
        gain in -2.0f64..0.5,
        sigma in 0.5f64..3.0,
        x in -6.0f64..6.0,
        z in -3.0f64..3.0,
    ) {
        let s = HillState { x, v: 0.0 };
        let p = ProportionalGaussianPolicy::new(gain, sigma, 3.0);
        let a = p.mean(&s) + z * sigma;
        let g = p.grad_log_prob(&s, &a);
        let d_gain = derivative(|k| ProportionalGaussianPolicy::new(k, sigma, 3.0).log_prob(&s, &a), gain, 1e-4);
        let d_sigma = derivative(|sd| ProportionalGaussianPolicy::new(gain, sd, 3.0).log_prob(&s, &a), sigma, 1e-4);
        prop_assert!((g[0] - d_gain).abs() <= 1e-10, "{} vs {d_gain}", g[0]);
        prop_assert!((g[1] - d_sigma).abs() <= 1e-10, "{} vs {d_sigma}", g[1]);
    }
}

#[test]
fn mlp_score_matches_finite_differences() {
    let mut r = rng::stream(8, 0);
    let h = 1e-5;
    for _ in 0..20 {
        let p = maze_policy(r.gen());
        let s = r.gen_range(0..p.inputs().len());
        let a = r.gen_range(0..4);
        let g = p.grad_log_prob(&s, &a);
        let coords: Vec<usize> = (0..300).map(|_| r.gen_range(0..g.len())).collect();
        let mut err = 0.0;
        let mut norm = 0.0;
        for &i in &coords {
            let mut plus = p.params().to_vec();
            plus[i] += h;
            let mut minus = p.params().to_vec();
            minus[i] -= h;
            let fd = (p.with_params(&plus).log_prob(&s, &a) - p.with_params(&minus).log_prob(&s, &a)) / (2.0 * h);
            err += (g[i] - fd).powi(2);
            norm += g[i].powi(2);
        }
        assert!(err.sqrt() <= 1e-5 * norm.sqrt(), "state {s} action {a}: {} vs {}", err.sqrt(), norm.sqrt());
    }
}
