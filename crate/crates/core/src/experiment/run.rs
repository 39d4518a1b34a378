//! Execution of validated experiments into in-memory artifacts.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    ball_between, coherence_report, efficiency_attraction_report, improvement_probability,
    multi_step_improvement_frequency, zero_reward_mass, Axis, ComponentScan, FrequencySettings, ImprovementProfile,
    LandscapeGrid, ReferenceMethod,
};
use crate::env::{make_corridor, make_grid_maze, make_hill, Corridor, GridMaze, Hill};
use crate::error::{invalid, Error, Result};
use crate::learn::{estimate_direction, train_with_observer, OptimizerState, TrainSettings};
use crate::mdp::{exact_policy_gradient, Estimate, FiniteMdp, Mdp};
use crate::policy::snapshot::Snapshot;
use crate::policy::{BernoulliPolicy, CategoricalMlpPolicy, DiscretePolicy, Policy, ProportionalGaussianPolicy};
use crate::num::num;
use crate::rng;
use crate::shaping::{
    evaluate_shaped_objective, exact_shaped_gradient, exact_shaped_objective, ExactObjective, IntrinsicBonus,
    ShapedObjective,
};

use super::config::{EnvironmentSpec, Evaluation, ExperimentConfig, ExperimentKind, ObjectiveSpec, PolicySpec};

/// One output file, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn written<F>(name: impl Into<String>, write: F) -> Result<Self>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        Ok(Self {
            name: name.into(),
            bytes,
        })
    }

    fn json(name: impl Into<String>, value: &Value) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self {
            name: name.into(),
            bytes,
        })
    }

    pub fn sha256(&self) -> String {
        hex(&self.bytes)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// SHA-256 of the little-endian bytes of a parameter vector.
pub fn parameter_hash(params: &[f64]) -> String {
    let bytes: Vec<u8> = params.iter().flat_map(|p| p.to_le_bytes()).collect();
    hex(&bytes)
}

/// An environment paired with its policy family.
trait Setting: Sync {
    type M: Mdp;
    type P: Policy<<Self::M as Mdp>::State, Action = <Self::M as Mdp>::Action>;

    fn mdp(&self) -> &Self::M;

    /// Closed-form policy at grid parameters.
    fn at(&self, theta: &[f64]) -> Result<Self::P>;

    fn initial(&self, run_seed: u64) -> Self::P;

    fn shape(&self, policy: &Self::P) -> Vec<usize>;

    /// `None` when no exact counterpart exists.
    fn exact(&self, _policy: &Self::P, _bonuses: &[IntrinsicBonus]) -> Result<Option<ExactObjective>> {
        Ok(None)
    }

    fn exact_gradient(&self, _policy: &Self::P, _bonuses: &[IntrinsicBonus], _step: f64) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }

    fn zero_reward_mass(&self, _policy: &Self::P) -> Result<Option<f64>> {
        Ok(None)
    }
}

fn finite_exact<P: DiscretePolicy>(mdp: &FiniteMdp, p: &P, bonuses: &[IntrinsicBonus]) -> Result<Option<ExactObjective>> {
    match exact_shaped_objective(mdp, p, bonuses) {
        Ok(e) => Ok(Some(e)),
        Err(Error::Unsupported(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn finite_gradient<P: DiscretePolicy>(
    mdp: &FiniteMdp,
    p: &P,
    bonuses: &[IntrinsicBonus],
    step: f64,
) -> Result<Option<Vec<f64>>> {
    if bonuses.iter().all(|b| b.weight == 0.0) {
        return exact_policy_gradient(mdp, p).map(Some);
    }
    match exact_shaped_gradient(mdp, p, bonuses, step) {
        Ok(g) => Ok(Some(g)),
        Err(Error::Unsupported(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct CorridorSetting {
    env: Corridor,
    theta: f64,
}

impl Setting for CorridorSetting {
    type M = FiniteMdp;
    type P = BernoulliPolicy;

    fn mdp(&self) -> &FiniteMdp {
        self.env.mdp()
    }

    fn at(&self, theta: &[f64]) -> Result<BernoulliPolicy> {
        Ok(BernoulliPolicy::new(theta[0]))
    }

    fn initial(&self, _run_seed: u64) -> BernoulliPolicy {
        BernoulliPolicy::new(self.theta)
    }

    fn shape(&self, _policy: &BernoulliPolicy) -> Vec<usize> {
        vec![1]
    }

    fn exact(&self, p: &BernoulliPolicy, bonuses: &[IntrinsicBonus]) -> Result<Option<ExactObjective>> {
        finite_exact(self.env.mdp(), p, bonuses)
    }

    fn exact_gradient(&self, p: &BernoulliPolicy, bonuses: &[IntrinsicBonus], step: f64) -> Result<Option<Vec<f64>>> {
        finite_gradient(self.env.mdp(), p, bonuses, step)
    }

    fn zero_reward_mass(&self, p: &BernoulliPolicy) -> Result<Option<f64>> {
        Ok(Some(zero_reward_mass(self.env.mdp(), p)?.delta))
    }
}

struct HillSetting {
    env: Hill,
    gain: f64,
    sigma: f64,
}

impl Setting for HillSetting {
    type M = Hill;
    type P = ProportionalGaussianPolicy;

    fn mdp(&self) -> &Hill {
        &self.env
    }

    fn at(&self, theta: &[f64]) -> Result<ProportionalGaussianPolicy> {
        Ok(ProportionalGaussianPolicy::new(theta[0], theta[1], self.env.config().x_target))
    }

    fn initial(&self, _run_seed: u64) -> ProportionalGaussianPolicy {
        ProportionalGaussianPolicy::new(self.gain, self.sigma, self.env.config().x_target)
    }

    fn shape(&self, _policy: &ProportionalGaussianPolicy) -> Vec<usize> {
        vec![2]
    }
}

struct MazeSetting {
    env: GridMaze,
    inputs: Arc<Vec<Vec<f64>>>,
    init_seed: Option<u64>,
}

impl Setting for MazeSetting {
    type M = FiniteMdp;
    type P = CategoricalMlpPolicy;

    fn mdp(&self) -> &FiniteMdp {
        self.env.mdp()
    }

    fn at(&self, _theta: &[f64]) -> Result<CategoricalMlpPolicy> {
        Err(Error::Unsupported("network policies have no parameter grid".into()))
    }

    fn initial(&self, run_seed: u64) -> CategoricalMlpPolicy {
        let seed = self.init_seed.unwrap_or_else(|| rng::init_seed(run_seed));
        CategoricalMlpPolicy::new(Arc::clone(&self.inputs), self.env.mdp().n_actions(), seed)
    }

    fn shape(&self, policy: &CategoricalMlpPolicy) -> Vec<usize> {
        policy.net().sizes().to_vec()
    }

    fn exact(&self, p: &CategoricalMlpPolicy, bonuses: &[IntrinsicBonus]) -> Result<Option<ExactObjective>> {
        finite_exact(self.env.mdp(), p, bonuses)
    }

    fn exact_gradient(
        &self,
        p: &CategoricalMlpPolicy,
        bonuses: &[IntrinsicBonus],
        step: f64,
    ) -> Result<Option<Vec<f64>>> {
        finite_gradient(self.env.mdp(), p, bonuses, step)
    }

    fn zero_reward_mass(&self, p: &CategoricalMlpPolicy) -> Result<Option<f64>> {
        Ok(Some(zero_reward_mass(self.env.mdp(), p)?.delta))
    }
}

/// Runs a validated experiment and returns its outputs, manifest excluded.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    match (&config.environment, &config.policy) {
        (EnvironmentSpec::Corridor(c), PolicySpec::Bernoulli { theta }) => dispatch(
            config,
            &CorridorSetting {
                env: make_corridor(c.clone())?,
                theta: *theta,
            },
        ),
        (EnvironmentSpec::Hill(c), PolicySpec::Gaussian { gain, sigma }) => dispatch(
            config,
            &HillSetting {
                env: make_hill(c.clone())?,
                gain: *gain,
                sigma: *sigma,
            },
        ),
        (EnvironmentSpec::Maze(c), PolicySpec::Mlp { init_seed }) => {
            let env = make_grid_maze(c.clone())?;
            let inputs = Arc::new(env.network_inputs());
            dispatch(
                config,
                &MazeSetting {
                    env,
                    inputs,
                    init_seed: *init_seed,
                },
            )
        }
        _ => Err(invalid("policy family does not match the environment")),
    }
}

/// Hash of the parameters the experiment starts from at its master seed.
pub fn initial_parameters_hash(config: &ExperimentConfig) -> Result<String> {
    Ok(match (&config.environment, &config.policy) {
        (EnvironmentSpec::Maze(c), PolicySpec::Mlp { init_seed }) => {
            let env = make_grid_maze(c.clone())?;
            let seed = init_seed.unwrap_or_else(|| rng::init_seed(config.seed));
            let policy = CategoricalMlpPolicy::new(Arc::new(env.network_inputs()), env.mdp().n_actions(), seed);
            parameter_hash(policy.params())
        }
        (_, PolicySpec::Bernoulli { theta }) => parameter_hash(&[*theta]),
        (_, PolicySpec::Gaussian { gain, sigma }) => parameter_hash(&[*gain, *sigma]),
        _ => return Err(invalid("policy family does not match the environment")),
    })
}

fn dispatch<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    match config.kind {
        ExperimentKind::Scan => scan(config, setting),
        ExperimentKind::Oracle => oracle(config, setting),
        ExperimentKind::Profile => profile(config, setting),
        ExperimentKind::Train => train(config, setting),
        ExperimentKind::Frequency => frequency(config, setting),
    }
}

/// Distinct bonuses across objectives, with each objective's weights on them.
struct BonusUnion {
    bonuses: Vec<IntrinsicBonus>,
    weights: Vec<Vec<f64>>,
}

impl BonusUnion {
    fn of(objectives: &[ObjectiveSpec]) -> Self {
        let mut bonuses: Vec<IntrinsicBonus> = Vec::new();
        let mut assignments = Vec::new();
        for o in objectives {
            let mut own = Vec::new();
            for b in o.intrinsic_bonuses() {
                let k = match bonuses.iter().position(|u| u.kind == b.kind) {
                    Some(k) => k,
                    None => {
                        let mut label = b.label.clone();
                        let mut suffix = 2;
                        while bonuses.iter().any(|u| u.label == label) {
                            label = format!("{}{suffix}", b.label);
                            suffix += 1;
                        }
                        bonuses.push(IntrinsicBonus {
                            label,
                            ..b.with_weight(1.0)
                        });
                        bonuses.len() - 1
                    }
                };
                own.push((k, b.weight));
            }
            assignments.push(own);
        }
        let weights = assignments
            .into_iter()
            .map(|own| {
                let mut w = vec![0.0; bonuses.len()];
                for (k, v) in own {
                    w[k] = v;
                }
                w
            })
            .collect();
        Self { bonuses, weights }
    }

    fn weight_map(&self, weights: &[f64]) -> Value {
        let map: serde_json::Map<String, Value> = self
            .bonuses
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(b, w)| (b.label.clone(), json!(w)))
            .collect();
        Value::Object(map)
    }
}

/// `J + Σ_k w_k J_k`, skipping zero weights.
fn combine(e: &ExactObjective, weights: &[f64]) -> f64 {
    e.j + weights
        .iter()
        .zip(&e.intrinsic)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, v)| w * v)
        .sum::<f64>()
}

/// Grid points with axis 0 varying slowest.
fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values().into_iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

fn cell_json(grid: &LandscapeGrid, cell: usize) -> Value {
    let e = grid.cells[cell];
    json!({ "theta": grid.theta(cell), "value": e.mean, "stderr": e.stderr })
}

fn landscape_json(grid: &LandscapeGrid) -> Value {
    json!({
        "local_maxima": grid.local_maxima.iter().map(|&c| cell_json(grid, c)).collect::<Vec<_>>(),
        "global_max": cell_json(grid, grid.global_max),
    })
}

fn landscape_artifact(name: String, grid: &LandscapeGrid, epsilon: f64) -> Result<Artifact> {
    Artifact::written(name, |w| grid.write_csv(w, epsilon))
}

fn shaped<'a, S: Setting>(
    config: &ExperimentConfig,
    setting: &'a S,
    bonuses: Vec<IntrinsicBonus>,
) -> Result<ShapedObjective<'a, S::M>> {
    ShapedObjective::new(setting.mdp(), bonuses, config.budget.histories, config.horizon()?)
}

fn budget_json(config: &ExperimentConfig) -> Result<Value> {
    Ok(json!({ "histories": config.budget.histories, "horizon": config.horizon()? }))
}

fn scan<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    let spec = config.scan.as_ref().ok_or_else(|| invalid("missing [scan] section"))?;
    let objectives = config.objectives();
    let union = BonusUnion::of(&objectives);
    let obj = shaped(config, setting, union.bonuses.clone())?;
    let components = ComponentScan::run(spec.axes.clone(), config.seed, spec.shared_seed, |theta, seed| {
        evaluate_shaped_objective(&obj, &setting.at(theta)?, seed)
    })?;
    let base = components.extrinsic(spec.margin)?;
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for (o, weights) in objectives.iter().zip(&union.weights) {
        let grid = components.combined(weights, spec.margin)?;
        artifacts.push(landscape_artifact(format!("landscape_{}.csv", o.name), &grid, spec.epsilon)?);
        let coherence = coherence_report(&base, &grid, spec.epsilon)?;
        reports.push(json!({
            "name": o.name,
            "weights": union.weight_map(weights),
            "landscape": landscape_json(&grid),
            "coherence": coherence,
        }));
    }
    let mut intrinsic = Vec::new();
    for (k, b) in union.bonuses.iter().enumerate() {
        let grid = components.intrinsic(k, spec.margin)?;
        artifacts.push(landscape_artifact(format!("landscape_int_{}.csv", b.label), &grid, spec.epsilon)?);
        intrinsic.push(json!({ "label": b.label, "global_max": cell_json(&grid, grid.global_max) }));
    }
    artifacts.push(Artifact::json(
        "scan.json",
        &json!({
            "budget": budget_json(config)?,
            "margin": spec.margin,
            "epsilon": spec.epsilon,
            "return": landscape_json(&base),
            "objectives": reports,
            "intrinsic": intrinsic,
        }),
    )?);
    Ok(artifacts)
}

fn oracle<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    let spec = config.oracle.as_ref().ok_or_else(|| invalid("missing [oracle] section"))?;
    let objectives = config.objectives();
    let union = BonusUnion::of(&objectives);
    let points = grid_points(&spec.axes);
    let rows = points
        .par_iter()
        .map(|theta| -> Result<(ExactObjective, Option<f64>)> {
            let p = setting.at(theta)?;
            let e = setting
                .exact(&p, &union.bonuses)?
                .ok_or_else(|| Error::Unsupported("no exact objective for this setting".into()))?;
            Ok((e, setting.zero_reward_mass(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    header.push("J".into());
    header.extend(union.bonuses.iter().map(|b| format!("Jint_{}", b.label)));
    header.extend(objectives.iter().map(|o| format!("L_{}", o.name)));
    header.push("zero_reward_mass".into());
    let table = Artifact::written("oracle.csv", |w| {
        writeln!(w, "{}", header.join(","))?;
        for (theta, (e, z)) in points.iter().zip(&rows) {
            let mut cols: Vec<String> = theta.iter().map(|t| num(*t)).collect();
            cols.push(num(e.j));
            cols.extend(e.intrinsic.iter().map(|v| num(*v)));
            cols.extend(union.weights.iter().map(|w| num(combine(e, w))));
            cols.push(z.map(num).unwrap_or_default());
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    })?;
    let mut artifacts = vec![table];

    let grid_of = |values: Vec<f64>| {
        LandscapeGrid::from_estimates(
            spec.axes.clone(),
            values.into_iter().map(Estimate::exact).collect(),
            spec.margin,
        )
    };
    let base = grid_of(rows.iter().map(|(e, _)| e.j).collect())?;
    let mut reports = Vec::new();
    for (o, weights) in objectives.iter().zip(&union.weights) {
        let grid = grid_of(rows.iter().map(|(e, _)| combine(e, weights)).collect())?;
        artifacts.push(landscape_artifact(format!("landscape_{}.csv", o.name), &grid, 0.0)?);
        reports.push(json!({
            "name": o.name,
            "weights": union.weight_map(weights),
            "landscape": landscape_json(&grid),
            "coherence": coherence_report(&base, &grid, 0.0)?,
        }));
    }
    let mut intrinsic = Vec::new();
    for (k, b) in union.bonuses.iter().enumerate() {
        let grid = grid_of(rows.iter().map(|(e, _)| e.intrinsic[k]).collect())?;
        artifacts.push(landscape_artifact(format!("landscape_int_{}.csv", b.label), &grid, 0.0)?);
        intrinsic.push(json!({ "label": b.label, "global_max": cell_json(&grid, grid.global_max) }));
    }
    artifacts.push(Artifact::json(
        "oracle.json",
        &json!({ "return": landscape_json(&base), "objectives": reports, "intrinsic": intrinsic }),
    )?);
    Ok(artifacts)
}

/// Means of `direction` and of `extrinsic` over many independent estimates.
fn large_sample_reference<M, P>(obj: &ShapedObjective<M>, policy: &P, batches: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)>
where
    M: Mdp,
    P: Policy<M::State, Action = M::Action>,
{
    let estimates = (0..batches)
        .into_par_iter()
        .map(|b| Ok(estimate_direction(obj, policy, rng::derive(seed, b as u64))?.0))
        .collect::<Result<Vec<_>>>()?;
    let dim = policy.params().len();
    let mut l = vec![0.0; dim];
    let mut j = vec![0.0; dim];
    for e in &estimates {
        l.iter_mut().zip(&e.direction).for_each(|(a, b)| *a += b);
        j.iter_mut().zip(&e.extrinsic).for_each(|(a, b)| *a += b);
    }
    let n = batches as f64;
    l.iter_mut().chain(j.iter_mut()).for_each(|v| *v /= n);
    Ok((l, j))
}

/// `(θ^int, θ†)`: maximizers of `Σ λ_k J_k` and of `L` over the profiled points.
fn ball_ends<S: Setting>(
    config: &ExperimentConfig,
    setting: &S,
    obj: &ShapedObjective<S::M>,
    points: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let weights = obj.weights();
    let values = points
        .par_iter()
        .map(|theta| -> Result<(f64, f64)> {
            let p = setting.at(theta)?;
            if let Some(e) = setting.exact(&p, &obj.bonuses)? {
                return Ok((combine(&e, &weights) - e.j, e.l));
            }
            let est = evaluate_shaped_objective(obj, &p, rng::derive(config.seed, rng::TAG_BALL))?;
            Ok((est.l().mean - est.j().mean, est.l().mean))
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = |f: &dyn Fn(&(f64, f64)) -> f64| {
        (0..values.len()).fold(0, |best, i| if f(&values[i]) > f(&values[best]) { i } else { best })
    };
    Ok((points[argmax(&|v| v.0)].clone(), points[argmax(&|v| v.1)].clone()))
}

fn profile<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    let spec = config.profile.as_ref().ok_or_else(|| invalid("missing [profile] section"))?;
    let points = grid_points(&spec.axes);
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for o in config.objectives() {
        let obj = shaped(config, setting, o.intrinsic_bonuses())?;
        let mut profiled = Vec::with_capacity(points.len());
        for (i, theta) in points.iter().enumerate() {
            let p = setting.at(theta)?;
            let point_seed = rng::derive(config.seed, i as u64);
            let directions = (0..spec.directions)
                .into_par_iter()
                .map(|m| Ok(estimate_direction(&obj, &p, rng::derive(point_seed, m as u64))?.0.direction))
                .collect::<Result<Vec<_>>>()?;
            let (grad_l, grad_j) = match spec.reference {
                ReferenceMethod::Oracle => {
                    let missing = || Error::Unsupported("no exact gradient for this setting".into());
                    (
                        setting.exact_gradient(&p, &obj.bonuses, spec.fd_step)?.ok_or_else(missing)?,
                        setting.exact_gradient(&p, &[], spec.fd_step)?.ok_or_else(missing)?,
                    )
                }
                ReferenceMethod::LargeSample => {
                    let seed = rng::derive(rng::derive(config.seed, rng::TAG_REFERENCE), i as u64);
                    large_sample_reference(&obj, &p, spec.reference_batches, seed)?
                }
            };
            profiled.push(improvement_probability(theta, &directions, &grad_l, &grad_j)?);
        }
        let profile = ImprovementProfile {
            points: profiled,
            reference: spec.reference,
        };
        let shaped_objective = obj.bonuses.iter().any(|b| b.weight > 0.0);
        let ball = if shaped_objective {
            let (theta_int, theta_dagger) = ball_ends(config, setting, &obj, &points)?;
            Some((theta_int, theta_dagger))
        } else {
            None
        };
        let boxed = ball.as_ref().map(|(a, b)| ball_between(a, b));
        artifacts.push(Artifact::written(format!("profile_{}.csv", o.name), |w| {
            profile.write_csv(w, boxed.as_deref())
        })?);
        let report = match &boxed {
            Some(b) => serde_json::to_value(efficiency_attraction_report(&profile, b)?)?,
            None => json!({
                "delta_efficiency": profile.points.iter().filter_map(|p| p.p_d.value()).reduce(f64::min),
            }),
        };
        reports.push(json!({
            "name": o.name,
            "theta_int": ball.as_ref().map(|b| b.0.clone()),
            "theta_dagger": ball.as_ref().map(|b| b.1.clone()),
            "report": report,
        }));
    }
    artifacts.push(Artifact::json(
        "profile.json",
        &json!({
            "budget": budget_json(config)?,
            "directions": spec.directions,
            "reference": spec.reference,
            "objectives": reports,
        }),
    )?);
    Ok(artifacts)
}

/// Return of a policy: exact when allowed and available, else a fixed-seed
/// Monte-Carlo mean.
fn final_return<S: Setting>(
    config: &ExperimentConfig,
    setting: &S,
    policy: &S::P,
    evaluation: Evaluation,
    histories: usize,
    seed: u64,
) -> Result<(f64, &'static str)> {
    if evaluation != Evaluation::Sampled {
        if let Some(e) = setting.exact(policy, &[])? {
            return Ok((e.j, "exact"));
        }
        if evaluation == Evaluation::Exact {
            return Err(Error::Unsupported("exact evaluation is not available here".into()));
        }
    }
    let obj = ShapedObjective::new(setting.mdp(), Vec::new(), histories, config.horizon()?)?;
    Ok((evaluate_shaped_objective(&obj, policy, seed)?.j().mean, "sampled"))
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn train<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    let spec = config.train.as_ref().ok_or_else(|| invalid("missing [train] section"))?;
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for o in config.objectives() {
        let obj = shaped(config, setting, o.intrinsic_bonuses())?;
        let mut runs = Vec::new();
        let mut finals = Vec::new();
        for r in 0..spec.runs {
            let run_seed = config.seed + r as u64;
            let initial = setting.initial(run_seed);
            let theta0 = parameter_hash(initial.params());
            let settings = TrainSettings {
                iterations: spec.iterations,
                seed: run_seed,
                wall_clock: spec.wall_clock,
            };
            let optimizer = OptimizerState::new(spec.optimizer, spec.step_size);
            let outcome = train_with_observer(&obj, initial, optimizer, settings, |_, _| Ok(()))?;
            let (ret, method) = final_return(
                config,
                setting,
                &outcome.policy,
                spec.evaluation,
                spec.evaluation_histories,
                rng::evaluation_seed(run_seed),
            )?;
            finals.push(ret);
            artifacts.push(Artifact {
                name: format!("train_{}_run{r}.csv", o.name),
                bytes: outcome.log.to_csv_string().into_bytes(),
            });
            let snapshot = Snapshot {
                family: outcome.policy.family().into(),
                shape: setting.shape(&outcome.policy),
                seed: run_seed,
                params: outcome.policy.params().to_vec(),
            };
            artifacts.push(Artifact {
                name: format!("params_{}_run{r}.txt", o.name),
                bytes: snapshot.to_text().into_bytes(),
            });
            runs.push(json!({
                "run": r,
                "seed": run_seed,
                "initial_parameters_sha256": theta0,
                "iterations_completed": outcome.log.records.len(),
                "halted": outcome.halted,
                "final_return": ret,
                "evaluation": method,
            }));
        }
        reports.push(json!({
            "name": o.name,
            "runs": runs,
            "median_final_return": median(&finals),
        }));
    }
    artifacts.push(Artifact::json(
        "train.json",
        &json!({
            "budget": budget_json(config)?,
            "iterations": spec.iterations,
            "optimizer": spec.optimizer,
            "step_size": spec.step_size,
            "objectives": reports,
        }),
    )?);
    Ok(artifacts)
}

/// Deterministic score of one objective inside improvement trials.
enum Scorer<'a, M> {
    Exact(Vec<IntrinsicBonus>),
    Sampled(ShapedObjective<'a, M>, u64),
}

impl<M: Mdp> Scorer<'_, M> {
    fn method(&self) -> &'static str {
        match self {
            Self::Exact(_) => "exact",
            Self::Sampled(..) => "sampled",
        }
    }
}

fn scorer<'a, S: Setting>(
    config: &ExperimentConfig,
    setting: &'a S,
    objective: &ObjectiveSpec,
    probe: &S::P,
) -> Result<Scorer<'a, S::M>> {
    let spec = config.frequency.as_ref().ok_or_else(|| invalid("missing [frequency] section"))?;
    let bonuses = objective.intrinsic_bonuses();
    if spec.evaluation != Evaluation::Sampled && setting.exact(probe, &bonuses)?.is_some() {
        return Ok(Scorer::Exact(bonuses));
    }
    if spec.evaluation == Evaluation::Exact {
        return Err(Error::Unsupported(format!("no exact score for objective `{}`", objective.name)));
    }
    let obj = ShapedObjective::new(setting.mdp(), bonuses, spec.evaluation_histories, config.horizon()?)?;
    Ok(Scorer::Sampled(obj, rng::evaluation_seed(config.seed)))
}

fn score<S: Setting>(setting: &S, scorer: &Scorer<S::M>, policy: &S::P) -> Result<f64> {
    match scorer {
        Scorer::Exact(bonuses) => Ok(setting
            .exact(policy, bonuses)?
            .ok_or_else(|| Error::Internal("exact score vanished".into()))?
            .l),
        Scorer::Sampled(obj, seed) => Ok(evaluate_shaped_objective(obj, policy, *seed)?.l().mean),
    }
}

fn frequency<S: Setting>(config: &ExperimentConfig, setting: &S) -> Result<Vec<Artifact>> {
    let spec = config.frequency.as_ref().ok_or_else(|| invalid("missing [frequency] section"))?;
    let objectives = config.objectives();
    let by_name = |name: &str| objectives.iter().find(|o| o.name == name).cloned();
    let initial = setting.initial(config.seed);

    let last = *spec.checkpoints.last().expect("validated non-empty");
    let mut policies: Vec<(usize, S::P)> = Vec::new();
    if last == 0 {
        policies.push((0, initial.clone()));
    } else {
        let name = spec.train_with.as_deref().ok_or_else(|| invalid("checkpoints need `train_with`"))?;
        let followed = by_name(name).ok_or_else(|| invalid(format!("unknown objective `{name}`")))?;
        let obj = shaped(config, setting, followed.intrinsic_bonuses())?;
        let settings = TrainSettings {
            iterations: last,
            seed: config.seed,
            wall_clock: false,
        };
        let outcome = train_with_observer(&obj, initial.clone(), OptimizerState::adam(spec.step_size), settings, |i, p| {
            if spec.checkpoints.contains(&i) {
                policies.push((i, p.clone()));
            }
            Ok(())
        })?;
        if let Some(reason) = outcome.halted {
            return Err(Error::UpdateRejected(format!("training stopped before the last checkpoint: {reason}")));
        }
    }

    let mut rows = Vec::new();
    for (checkpoint, policy) in &policies {
        let settings = FrequencySettings {
            trials: spec.trials,
            steps: spec.steps,
            threshold: spec.threshold,
            step_size: spec.step_size,
            seed: rng::derive(config.seed, *checkpoint as u64),
        };
        for d in &objectives {
            let obj = shaped(config, setting, d.intrinsic_bonuses())?;
            let scored: Vec<ObjectiveSpec> = if spec.scores.is_empty() {
                vec![d.clone()]
            } else {
                spec.scores.iter().filter_map(|s| by_name(s)).collect()
            };
            for s in scored {
                let sc = scorer(config, setting, &s, policy)?;
                let proportion = multi_step_improvement_frequency::<<S::M as Mdp>::State, _, _, _>(
                    policy,
                    settings,
                    |p, seed| Ok(estimate_direction(&obj, p, seed)?.0.direction),
                    |p| score(setting, &sc, p),
                )?;
                rows.push((*checkpoint, d.name.clone(), s.name.clone(), sc.method(), proportion));
            }
        }
    }
    let table = Artifact::written("frequency.csv", |w| {
        writeln!(w, "checkpoint,direction,score,successes,trials,p,lo,hi")?;
        for (c, d, s, _, p) in &rows {
            writeln!(w, "{c},{d},{s},{},{},{},{},{}", p.successes, p.trials, num(p.p), num(p.lo), num(p.hi))?;
        }
        Ok(())
    })?;
    let report: Vec<Value> = rows
        .iter()
        .map(|(c, d, s, m, p)| json!({ "checkpoint": c, "direction": d, "score": s, "evaluation": m, "frequency": p }))
        .collect();
    Ok(vec![
        table,
        Artifact::json(
            "frequency.json",
            &json!({
                "budget": budget_json(config)?,
                "trials": spec.trials,
                "steps": spec.steps,
                "threshold": spec.threshold,
                "step_size": spec.step_size,
                "results": report,
            }),
        )?,
    ])
}
