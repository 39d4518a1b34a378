use pgx::env::{make_corridor, CorridorConfig};
use pgx::learn::{estimate_direction, reinforce_extrinsic, train, OptimizerState, Rule};
use pgx::mdp::{exact_truncated_return, FiniteMdp};
use pgx::policy::{BernoulliPolicy, Policy};
use pgx::rng;
use pgx::shaping::{Binning, DensitySpec, IntrinsicBonus, ShapedObjective};

/// One state, two self-looping actions, no reward.
fn single_state(gamma: f64) -> FiniteMdp {
    FiniteMdp::new(1, 2, vec![1.0], vec![vec![(0, 1.0)], vec![(0, 1.0)]], vec![0.0, 0.0], gamma).unwrap()
}

fn score(p: &BernoulliPolicy, a: usize) -> f64 {
    Policy::<usize>::grad_log_prob(p, &0, &a)[0]
}

#[test]
fn one_step_action_entropy_by_hand() {
    let mdp = single_state(0.9);
    let lambda = 0.7;
    let obj = ShapedObjective::new(&mdp, vec![IntrinsicBonus::action_entropy(lambda)], 8, 1).unwrap();
    let p = BernoulliPolicy::new(0.3);
    let (est, batch) = estimate_direction(&obj, &p, 12).unwrap();
    let expected: f64 = batch
        .trajectories
        .iter()
        .map(|t| {
            let a = t.actions[0];
            score(&p, a) * -Policy::<usize>::log_prob(&p, &0, &a)
        })
        .sum::<f64>()
        * lambda
        / 8.0;
    assert!((est.intrinsic[0][0] - expected).abs() < 1e-12, "{} vs {expected}", est.intrinsic[0][0]);
    assert_eq!(est.extrinsic, vec![0.0]);
}

#[test]
fn constant_state_bonus_is_reinforce_on_a_constant() {
    let gamma = 0.9;
    let horizon = 6;
    let mdp = single_state(gamma);
    let lambda = 0.4;
    let bins = DensitySpec::Histogram {
        binning: Binning::Discrete { lo: 0, count: 3 },
    };
    let obj = ShapedObjective::new(&mdp, vec![IntrinsicBonus::state_entropy(lambda, bins)], 8, horizon).unwrap();
    let p = BernoulliPolicy::new(0.6);
    let (est, batch) = estimate_direction(&obj, &p, 3).unwrap();
    let values: Vec<f64> = batch.trajectories.iter().flat_map(|t| t.intrinsic[0].iter().copied()).collect();
    let c = values[0];
    assert!(c > 0.0 && values.iter().all(|v| *v == c));
    let expected: f64 = batch
        .trajectories
        .iter()
        .map(|t| {
            (0..horizon)
                .map(|k| score(&p, t.actions[k]) * c * (k..horizon).map(|j| gamma.powi(j as i32)).sum::<f64>())
                .sum::<f64>()
        })
        .sum::<f64>()
        * lambda
        / 8.0;
    assert!((est.intrinsic[0][0] - expected).abs() < 1e-12 * expected.abs().max(1.0));
}

#[test]
fn zero_weight_gives_exact_zero_intrinsic_gradient() {
    let c = make_corridor(CorridorConfig::default()).unwrap();
    let obj = ShapedObjective::new(c.mdp(), vec![IntrinsicBonus::action_entropy(0.0)], 8, 50).unwrap();
    let (est, _) = estimate_direction(&obj, &BernoulliPolicy::new(0.4), 1).unwrap();
    assert_eq!(est.intrinsic[0], vec![0.0]);
}

#[test]
fn estimator_is_unbiased_for_the_truncated_return() {
    let c = make_corridor(CorridorConfig::default()).unwrap();
    let obj = ShapedObjective::new(c.mdp(), vec![], 8, 100).unwrap();
    let p = BernoulliPolicy::new(0.5);
    let draws: Vec<f64> = (0..10_000)
        .map(|i| reinforce_extrinsic(&obj, &p, rng::derive(21, i)).unwrap()[0])
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let se = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let h = 1e-5;
    let jt = |t: f64| exact_truncated_return(c.mdp(), &BernoulliPolicy::new(t), 100);
    let oracle = (jt(0.5 + h) - jt(0.5 - h)) / (2.0 * h);
    assert!((mean - oracle).abs() <= 4.0 * se, "{mean} ± {se} vs {oracle}");
}

#[test]
fn zero_iterations_change_nothing() {
    let c = make_corridor(CorridorConfig::default()).unwrap();
    let obj = ShapedObjective::new(c.mdp(), vec![], 8, 100).unwrap();
    let out = train(&obj, BernoulliPolicy::new(0.42), OptimizerState::adam(0.1), 0, 1).unwrap();
    assert!(out.log.records.is_empty());
    assert_eq!(out.policy.theta(), 0.42);
    assert!(out.halted.is_none());
}

#[test]
fn gradient_ascent_from_a_good_start_reaches_the_target() {
    let c = make_corridor(CorridorConfig::default()).unwrap();
    let obj = ShapedObjective::new(c.mdp(), vec![], 8, 100).unwrap();
    let near = (0..5)
        .filter(|&seed| {
            let out = train(&obj, BernoulliPolicy::new(0.9), OptimizerState::new(Rule::Sga, 1e-4), 200, seed).unwrap();
            (out.policy.theta() - 1.0).abs() <= 0.05
        })
        .count();
    assert!(near >= 4, "{near} of 5 seeds");
}

#[test]
fn training_is_deterministic() {
    let c = make_corridor(CorridorConfig::default()).unwrap();
    let bins = DensitySpec::Histogram {
        binning: Binning::Discrete { lo: 1, count: 15 },
    };
    let obj = ShapedObjective::new(c.mdp(), vec![IntrinsicBonus::state_entropy(0.2, bins)], 8, 100).unwrap();
    let run = || train(&obj, BernoulliPolicy::new(0.3), OptimizerState::adam(0.01), 25, 9).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log.to_csv_string(), b.log.to_csv_string());
    assert_eq!(a.policy.theta().to_bits(), b.policy.theta().to_bits());
}
