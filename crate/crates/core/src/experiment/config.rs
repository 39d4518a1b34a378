//! Experiment documents: one TOML file per experiment, schema version 1.
//!
//! ```toml
//! schema_version = 1
//! name = "corridor_fig4c"
//! kind = "profile"
//! seed = 4
//!
//! [environment]
//! kind = "corridor"
//!
//! [policy]
//! family = "bernoulli"
//! theta = 0.5
//!
//! [[objective]]
//! name = "J"
//!
//! [[objective]]
//! name = "Ls"
//! [[objective.bonus]]
//! kind = "state-entropy"
//! weight = 0.2
//! density = { estimator = "histogram", binning = { kind = "discrete", lo = 1, count = 15 } }
//!
//! [budget]
//! histories = 8
//! horizon = 100
//!
//! [profile]
//! axes = [{ name = "theta", lo = 0.01, hi = 0.99, points = 99 }]
//! directions = 500
//! ```

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::analysis::{Axis, ReferenceMethod, DEFAULT_MARGIN};
use crate::env::{make_corridor, make_grid_maze, make_hill, CorridorConfig, GridMazeConfig, HillConfig};
use crate::error::{Error, Result};
use crate::learn::Rule;
use crate::shaping::{Binning, DensitySpec, IntrinsicBonus};

use super::default_horizon;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Scan,
    Train,
    Profile,
    Frequency,
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Scan => "scan",
            Self::Train => "train",
            Self::Profile => "profile",
            Self::Frequency => "frequency",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvironmentSpec {
    Corridor(CorridorConfig),
    Hill(HillConfig),
    Maze(GridMazeConfig),
}

impl EnvironmentSpec {
    pub fn discount(&self) -> f64 {
        match self {
            Self::Corridor(c) => c.discount,
            Self::Hill(c) => c.discount,
            Self::Maze(c) => c.discount,
        }
    }

    /// Whether the exact oracles apply.
    pub fn is_finite(&self) -> bool {
        !matches!(self, Self::Hill(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicySpec {
    /// Corridor policy `π(right) = θ`.
    Bernoulli { theta: f64 },
    /// Hill policy `a ~ N(K (x − x_target), σ²)`.
    Gaussian { gain: f64, sigma: f64 },
    /// Maze network; the initial weights come from `init_seed`, or from the
    /// run seed when absent.
    Mlp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_seed: Option<u64>,
    },
}

impl PolicySpec {
    fn family(&self) -> &'static str {
        match self {
            Self::Bernoulli { .. } => "bernoulli",
            Self::Gaussian { .. } => "gaussian",
            Self::Mlp { .. } => "mlp",
        }
    }

    /// Parameter count of the closed-form families.
    pub fn closed_form_dim(&self) -> Option<usize> {
        match self {
            Self::Bernoulli { .. } => Some(1),
            Self::Gaussian { .. } => Some(2),
            Self::Mlp { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BonusSpec {
    ActionEntropy { weight: f64 },
    StateEntropy { weight: f64, density: DensitySpec },
}

impl BonusSpec {
    pub fn weight(&self) -> f64 {
        match self {
            Self::ActionEntropy { weight } | Self::StateEntropy { weight, .. } => *weight,
        }
    }

    pub fn to_bonus(&self) -> IntrinsicBonus {
        match self {
            Self::ActionEntropy { weight } => IntrinsicBonus::action_entropy(*weight),
            Self::StateEntropy { weight, density } => IntrinsicBonus::state_entropy(*weight, density.clone()),
        }
    }
}

/// A named learning objective `J + Σ_k λ_k J_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    #[serde(default, rename = "bonus", skip_serializing_if = "Vec::is_empty")]
    pub bonuses: Vec<BonusSpec>,
}

impl ObjectiveSpec {
    pub fn unshaped() -> Self {
        Self {
            name: "J".into(),
            bonuses: Vec::new(),
        }
    }

    pub fn intrinsic_bonuses(&self) -> Vec<IntrinsicBonus> {
        self.bonuses.iter().map(BonusSpec::to_bonus).collect()
    }

    pub fn uses_mixture(&self) -> bool {
        self.bonuses.iter().any(|b| {
            matches!(
                b,
                BonusSpec::StateEntropy {
                    density: DensitySpec::Gmm { .. },
                    ..
                }
            )
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    /// Histories per batch (`N`).
    #[serde(default = "default_histories")]
    pub histories: usize,
    /// Rollout length; the geometric coverage rule applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_coverage")]
    pub coverage: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        Self {
            histories: default_histories(),
            horizon: None,
            coverage: default_coverage(),
        }
    }
}

fn default_histories() -> usize {
    32
}

fn default_coverage() -> f64 {
    0.85
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

fn default_true() -> bool {
    true
}

fn default_step_size() -> f64 {
    5e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub axes: Vec<Axis>,
    /// Tolerance of the `in_omega` column.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Common random numbers across cells.
    #[serde(default = "default_true")]
    pub shared_seed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub axes: Vec<Axis>,
    /// Direction draws per point (`M`).
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_reference")]
    pub reference: ReferenceMethod,
    /// Independent estimates averaged by the large-sample reference.
    #[serde(default = "default_reference_batches")]
    pub reference_batches: usize,
    /// Central-difference step of the oracle reference for shaped objectives.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_directions() -> usize {
    500
}

fn default_reference() -> ReferenceMethod {
    ReferenceMethod::Oracle
}

fn default_reference_batches() -> usize {
    2000
}

fn default_fd_step() -> f64 {
    1e-5
}

/// How returns are scored after training or inside improvement trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    /// Exact whenever an oracle exists for the objective, sampled otherwise.
    Auto,
    Exact,
    /// Fixed-seed Monte-Carlo with `evaluation_histories` histories.
    Sampled,
}

fn default_evaluation() -> Evaluation {
    Evaluation::Auto
}

fn default_evaluation_histories() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub iterations: usize,
    #[serde(default = "default_rule")]
    pub optimizer: Rule,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Independent runs; run `r` uses seed `seed + r`.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_evaluation")]
    pub evaluation: Evaluation,
    #[serde(default = "default_evaluation_histories")]
    pub evaluation_histories: usize,
    /// Fill the `ms` column; outputs are then no longer byte-reproducible.
    #[serde(default)]
    pub wall_clock: bool,
}

fn default_rule() -> Rule {
    Rule::Adam
}

fn default_runs() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_evaluation")]
    pub evaluation: Evaluation,
    #[serde(default = "default_frequency_histories")]
    pub evaluation_histories: usize,
    /// Objectives whose improvement is counted; each direction objective is
    /// scored by itself when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<String>,
    /// Training iterations at which the test is repeated.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<usize>,
    /// Objective followed between checkpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_with: Option<String>,
}

fn default_trials() -> usize {
    100
}

fn default_steps() -> usize {
    5
}

fn default_threshold() -> f64 {
    0.2
}

fn default_frequency_histories() -> usize {
    64
}

fn default_checkpoints() -> Vec<usize> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub axes: Vec<Axis>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

/// A complete experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Declared wall-clock budget in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
    pub environment: EnvironmentSpec,
    pub policy: PolicySpec,
    /// Defaults to the unshaped return alone.
    #[serde(default, rename = "objective")]
    pub objectives: Vec<ObjectiveSpec>,
    #[serde(default)]
    pub budget: BudgetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

/// One step of a key path into the document.
#[derive(Clone, Debug, PartialEq)]
enum Seg {
    Key(&'static str),
    Index(usize),
}

type Path = Vec<Seg>;

fn render(path: &[Seg]) -> String {
    let mut out = String::new();
    for seg in path {
        match seg {
            Seg::Key(k) if out.is_empty() => out.push_str(k),
            Seg::Key(k) => {
                out.push('.');
                out.push_str(k);
            }
            Seg::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Serde reports unknown fields at the enclosing table; the key itself is the
/// first line after `offset` that assigns it.
fn unknown_key_line(text: &str, offset: usize, message: &str) -> Option<usize> {
    let name = message.strip_prefix("unknown field `")?.split('`').next()?;
    let start = line_of(text, offset);
    text.lines()
        .enumerate()
        .skip(start - 1)
        .find(|(_, l)| {
            l.trim_start()
                .strip_prefix(name)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
}

/// Line of the deepest item of `path` present in the document.
fn locate(text: &str, path: &[Seg]) -> Option<usize> {
    let doc = toml_edit::ImDocument::parse(text).ok()?;
    let mut item = doc.as_item();
    let mut span: Option<Range<usize>> = None;
    for seg in path {
        let next = match seg {
            Seg::Key(k) => item.get(*k),
            Seg::Index(i) => item.get(*i),
        };
        match next {
            Some(n) => {
                item = n;
                span = n.span().or(span);
            }
            None => break,
        }
    }
    span.map(|s| line_of(text, s.start))
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail(&self, path: Path, message: impl Into<String>) -> Error {
        let message = message.into();
        Error::Config {
            line: locate(self.text, &path),
            message: if path.is_empty() {
                message
            } else {
                format!("`{}`: {message}", render(&path))
            },
        }
    }

    fn ensure(&self, ok: bool, path: Path, message: impl Into<String>) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(path, message))
        }
    }
}

fn key(k: &'static str) -> Seg {
    Seg::Key(k)
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl ExperimentConfig {
    /// Parses and validates a document; errors carry the offending line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| unknown_key_line(text, s.start, e.message()).unwrap_or_else(|| line_of(text, s.start))),
            message: e.message().trim().to_string(),
        })?;
        config.validate_against(text)?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serializing config: {e}")))
    }

    /// Objectives with the unshaped default filled in.
    pub fn objectives(&self) -> Vec<ObjectiveSpec> {
        if self.objectives.is_empty() {
            vec![ObjectiveSpec::unshaped()]
        } else {
            self.objectives.clone()
        }
    }

    pub fn horizon(&self) -> Result<usize> {
        match self.budget.horizon {
            Some(t) => Ok(t),
            None => default_horizon(self.environment.discount(), self.budget.coverage),
        }
    }

    /// Validates ranges and cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        let text = self.to_toml_string()?;
        self.validate_against(&text)
    }

    fn validate_against(&self, text: &str) -> Result<()> {
        let c = Checker { text };
        c.ensure(
            self.schema_version == SCHEMA_VERSION,
            vec![key("schema_version")],
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version),
        )?;
        c.ensure(
            is_identifier(&self.name),
            vec![key("name")],
            "must be a non-empty identifier of letters, digits, `_` or `-`",
        )?;
        c.ensure(
            self.seed <= i64::MAX as u64,
            vec![key("seed")],
            "must fit in a signed 64-bit integer",
        )?;
        if let Some(b) = self.time_budget {
            c.ensure(b.is_finite() && b > 0.0, vec![key("time_budget")], "must be positive")?;
        }
        self.check_environment(&c)?;
        self.check_policy(&c)?;
        self.check_objectives(&c)?;
        self.check_budget(&c)?;
        self.check_sections(&c)?;
        match self.kind {
            ExperimentKind::Scan => self.check_scan(&c),
            ExperimentKind::Profile => self.check_profile(&c),
            ExperimentKind::Train => self.check_train(&c),
            ExperimentKind::Frequency => self.check_frequency(&c),
            ExperimentKind::Oracle => self.check_oracle(&c),
        }
    }

    fn check_environment(&self, c: &Checker) -> Result<()> {
        let gamma = self.environment.discount();
        c.ensure(
            gamma > 0.0 && gamma < 1.0,
            vec![key("environment"), key("discount")],
            "discount must lie in (0, 1)",
        )?;
        let built = match &self.environment {
            EnvironmentSpec::Corridor(cfg) => make_corridor(cfg.clone()).map(|_| ()),
            EnvironmentSpec::Hill(cfg) => make_hill(cfg.clone()).map(|_| ()),
            EnvironmentSpec::Maze(cfg) => make_grid_maze(cfg.clone()).map(|_| ()),
        };
        built.map_err(|e| c.fail(vec![key("environment")], e.to_string()))
    }

    fn check_policy(&self, c: &Checker) -> Result<()> {
        let path = || vec![key("policy"), key("family")];
        match (&self.environment, &self.policy) {
            (EnvironmentSpec::Corridor(_), PolicySpec::Bernoulli { theta }) => c.ensure(
                (0.0..=1.0).contains(theta),
                vec![key("policy"), key("theta")],
                "must lie in [0, 1]",
            ),
            (EnvironmentSpec::Hill(_), PolicySpec::Gaussian { gain, sigma }) => {
                c.ensure(gain.is_finite(), vec![key("policy"), key("gain")], "must be finite")?;
                c.ensure(
                    sigma.is_finite() && *sigma > 0.0,
                    vec![key("policy"), key("sigma")],
                    "must be positive",
                )
            }
            (EnvironmentSpec::Maze(_), PolicySpec::Mlp { init_seed }) => c.ensure(
                init_seed.map_or(true, |s| s <= i64::MAX as u64),
                vec![key("policy"), key("init_seed")],
                "must fit in a signed 64-bit integer",
            ),
            (env, policy) => Err(c.fail(
                path(),
                format!(
                    "policy family `{}` does not apply to the {} environment (corridor takes bernoulli, hill takes gaussian, maze takes mlp)",
                    policy.family(),
                    match env {
                        EnvironmentSpec::Corridor(_) => "corridor",
                        EnvironmentSpec::Hill(_) => "hill",
                        EnvironmentSpec::Maze(_) => "maze",
                    }
                ),
            )),
        }
    }

    fn check_objectives(&self, c: &Checker) -> Result<()> {
        let mut names: Vec<&str> = Vec::new();
        for (i, obj) in self.objectives.iter().enumerate() {
            let at = |rest: Vec<Seg>| {
                let mut p = vec![key("objective"), Seg::Index(i)];
                p.extend(rest);
                p
            };
            c.ensure(
                is_identifier(&obj.name),
                at(vec![key("name")]),
                "must be a non-empty identifier of letters, digits, `_` or `-`",
            )?;
            c.ensure(
                !names.contains(&obj.name.as_str()),
                at(vec![key("name")]),
                format!("duplicate objective name `{}`", obj.name),
            )?;
            names.push(&obj.name);
            let mut labels: Vec<String> = Vec::new();
            for (k, bonus) in obj.bonuses.iter().enumerate() {
                let bat = |field: &'static str| at(vec![key("bonus"), Seg::Index(k), key(field)]);
                let w = bonus.weight();
                c.ensure(
                    w.is_finite() && w >= 0.0,
                    bat("weight"),
                    format!("bonus weights must be non-negative and finite, got {w}"),
                )?;
                let label = bonus.to_bonus().label;
                c.ensure(
                    !labels.contains(&label),
                    bat("kind"),
                    "an objective takes at most one bonus of each kind",
                )?;
                labels.push(label);
                if let BonusSpec::StateEntropy { density, .. } = bonus {
                    match density {
                        DensitySpec::Gmm { components } => {
                            c.ensure(*components >= 1, bat("density"), "a mixture needs at least one component")?
                        }
                        DensitySpec::Histogram { binning } => match binning {
                            Binning::Discrete { count, .. } => {
                                c.ensure(*count >= 1, bat("density"), "a histogram needs at least one bin")?
                            }
                            Binning::Uniform { lo, hi, bins } => c.ensure(
                                *bins >= 1 && lo.is_finite() && hi.is_finite() && lo < hi,
                                bat("density"),
                                "uniform binning needs `lo < hi` and at least one bin",
                            )?,
                        },
                    }
                }
            }
        }
        Ok(())
    }

    fn check_budget(&self, c: &Checker) -> Result<()> {
        c.ensure(
            self.budget.histories >= 1,
            vec![key("budget"), key("histories")],
            "must be at least 1",
        )?;
        c.ensure(
            self.budget.horizon.map_or(true, |t| t >= 1),
            vec![key("budget"), key("horizon")],
            "must be at least 1",
        )?;
        c.ensure(
            self.budget.coverage > 0.0 && self.budget.coverage < 1.0,
            vec![key("budget"), key("coverage")],
            "must lie in (0, 1)",
        )
    }

    fn check_sections(&self, c: &Checker) -> Result<()> {
        let present = [
            (ExperimentKind::Scan, "scan", self.scan.is_some()),
            (ExperimentKind::Profile, "profile", self.profile.is_some()),
            (ExperimentKind::Train, "train", self.train.is_some()),
            (ExperimentKind::Frequency, "frequency", self.frequency.is_some()),
            (ExperimentKind::Oracle, "oracle", self.oracle.is_some()),
        ];
        for (kind, section, is_present) in present {
            if kind == self.kind {
                c.ensure(
                    is_present,
                    vec![key("kind")],
                    format!("kind `{section}` needs a `[{section}]` section"),
                )?;
            } else {
                c.ensure(
                    !is_present,
                    vec![key(section)],
                    format!("section `[{section}]` is not used by kind `{}`", self.kind.as_str()),
                )?;
            }
        }
        Ok(())
    }

    fn check_axes(&self, c: &Checker, section: &'static str, axes: &[Axis]) -> Result<()> {
        let at = |i: usize, f: &'static str| vec![key(section), key("axes"), Seg::Index(i), key(f)];
        let Some(dim) = self.policy.closed_form_dim() else {
            return Err(c.fail(
                vec![key("policy"), key("family")],
                format!("kind `{}` needs a closed-form policy family", self.kind.as_str()),
            ));
        };
        c.ensure(
            axes.len() == dim,
            vec![key(section), key("axes")],
            format!("the {} policy has {dim} parameter(s); give one axis per parameter", self.policy.family()),
        )?;
        for (i, a) in axes.iter().enumerate() {
            c.ensure(a.points >= 1, at(i, "points"), "must be at least 1")?;
            c.ensure(
                a.lo.is_finite() && a.hi.is_finite() && a.lo <= a.hi,
                at(i, "lo"),
                "axis bounds must be finite with `lo ≤ hi`",
            )?;
        }
        match self.policy {
            PolicySpec::Bernoulli { .. } => c.ensure(
                axes[0].lo >= 0.0 && axes[0].hi <= 1.0,
                at(0, "lo"),
                "Bernoulli parameters must lie in [0, 1]",
            ),
            PolicySpec::Gaussian { .. } => c.ensure(axes[1].lo > 0.0, at(1, "lo"), "σ must be positive"),
            PolicySpec::Mlp { .. } => Ok(()),
        }
    }

    fn require_oracle(&self, c: &Checker, path: Path, what: &str) -> Result<()> {
        c.ensure(
            self.environment.is_finite(),
            path.clone(),
            format!("{what} needs a finite environment (corridor or maze)"),
        )?;
        if let Some((i, _)) = self.objectives.iter().enumerate().find(|(_, o)| o.uses_mixture()) {
            return Err(c.fail(
                vec![key("objective"), Seg::Index(i)],
                format!("{what} has no exact counterpart for mixture state bonuses"),
            ));
        }
        Ok(())
    }

    fn check_scan(&self, c: &Checker) -> Result<()> {
        let s = self.scan.as_ref().expect("checked by check_sections");
        self.check_axes(c, "scan", &s.axes)?;
        c.ensure(
            s.epsilon.is_finite() && s.epsilon >= 0.0,
            vec![key("scan"), key("epsilon")],
            "must be non-negative",
        )?;
        c.ensure(
            s.margin.is_finite() && s.margin >= 0.0,
            vec![key("scan"), key("margin")],
            "must be non-negative",
        )
    }

    fn check_profile(&self, c: &Checker) -> Result<()> {
        let p = self.profile.as_ref().expect("checked by check_sections");
        self.check_axes(c, "profile", &p.axes)?;
        c.ensure(
            p.directions >= 1,
            vec![key("profile"), key("directions")],
            "must be at least 1",
        )?;
        c.ensure(
            p.reference_batches >= 1,
            vec![key("profile"), key("reference_batches")],
            "must be at least 1",
        )?;
        c.ensure(
            p.fd_step.is_finite() && p.fd_step > 0.0,
            vec![key("profile"), key("fd_step")],
            "must be positive",
        )?;
        if p.reference == ReferenceMethod::Oracle {
            self.require_oracle(c, vec![key("profile"), key("reference")], "the oracle reference")?;
        }
        Ok(())
    }

    fn check_train(&self, c: &Checker) -> Result<()> {
        let t = self.train.as_ref().expect("checked by check_sections");
        c.ensure(t.iterations >= 1, vec![key("train"), key("iterations")], "must be at least 1")?;
        c.ensure(
            t.step_size.is_finite() && t.step_size > 0.0,
            vec![key("train"), key("step_size")],
            "must be positive",
        )?;
        c.ensure(t.runs >= 1, vec![key("train"), key("runs")], "must be at least 1")?;
        c.ensure(
            self.seed.checked_add(t.runs as u64).is_some_and(|s| s <= i64::MAX as u64),
            vec![key("train"), key("runs")],
            "run seeds overflow",
        )?;
        c.ensure(
            t.evaluation_histories >= 1,
            vec![key("train"), key("evaluation_histories")],
            "must be at least 1",
        )?;
        if t.evaluation == Evaluation::Exact {
            c.ensure(
                self.environment.is_finite(),
                vec![key("train"), key("evaluation")],
                "exact evaluation needs a finite environment",
            )?;
        }
        Ok(())
    }

    fn check_frequency(&self, c: &Checker) -> Result<()> {
        let f = self.frequency.as_ref().expect("checked by check_sections");
        let at = |k: &'static str| vec![key("frequency"), key(k)];
        c.ensure(f.trials >= 1, at("trials"), "must be at least 1")?;
        c.ensure(f.steps >= 1, at("steps"), "must be at least 1")?;
        c.ensure(f.threshold.is_finite(), at("threshold"), "must be finite")?;
        c.ensure(f.step_size.is_finite() && f.step_size > 0.0, at("step_size"), "must be positive")?;
        c.ensure(f.evaluation_histories >= 1, at("evaluation_histories"), "must be at least 1")?;
        let names: Vec<String> = self.objectives().into_iter().map(|o| o.name).collect();
        for s in &f.scores {
            c.ensure(names.contains(s), at("scores"), format!("unknown objective `{s}`"))?;
        }
        c.ensure(
            !f.checkpoints.is_empty() && f.checkpoints.windows(2).all(|w| w[0] < w[1]),
            at("checkpoints"),
            "must be a non-empty, strictly increasing list",
        )?;
        if f.checkpoints.iter().any(|&i| i > 0) {
            match &f.train_with {
                Some(name) => c.ensure(names.contains(name), at("train_with"), format!("unknown objective `{name}`"))?,
                None => return Err(c.fail(at("checkpoints"), "checkpoints after 0 need `train_with`")),
            }
        }
        if f.evaluation == Evaluation::Exact {
            self.require_oracle(c, at("evaluation"), "exact evaluation")?;
        }
        Ok(())
    }

    fn check_oracle(&self, c: &Checker) -> Result<()> {
        let o = self.oracle.as_ref().expect("checked by check_sections");
        self.require_oracle(c, vec![key("kind")], "kind `oracle`")?;
        self.check_axes(c, "oracle", &o.axes)?;
        c.ensure(
            o.margin.is_finite() && o.margin >= 0.0,
            vec![key("oracle"), key("margin")],
            "must be non-negative",
        )
    }
}
