//! Config-driven experiments: one TOML document in, CSV/JSON artifacts and a
//! `manifest.json` out.

mod config;
mod run;

pub use config::{
    BonusSpec, BudgetSpec, EnvironmentSpec, Evaluation, ExperimentConfig, ExperimentKind, FrequencySpec,
    ObjectiveSpec, OracleSpec, PolicySpec, ProfileSpec, ScanSpec, TrainSpec, SCHEMA_VERSION,
};
pub use run::{execute, initial_parameters_hash, parameter_hash, Artifact};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest `T` with `1 − γ^T ≥ coverage`, and at least 1.
pub fn default_horizon(gamma: f64, coverage: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("discount {gamma} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&coverage) {
        return Err(invalid(format!("coverage {coverage} outside [0, 1)")));
    }
    let t = ((1.0 - coverage).ln() / gamma.ln()).ceil();
    Ok((t as usize).max(1))
}

pub const SEED_VAR: &str = "PGX_SEED";
pub const OUT_VAR: &str = "PGX_OUT";

/// Command-line overrides; unset fields fall back to the environment
/// variables, then to the config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunOptions {
    /// Fills unset fields from `PGX_SEED` and `PGX_OUT`.
    pub fn with_env(self) -> Result<Self> {
        self.with_vars(std::env::var(SEED_VAR).ok(), std::env::var(OUT_VAR).ok())
    }

    pub fn with_vars(mut self, seed: Option<String>, out: Option<String>) -> Result<Self> {
        if self.seed.is_none() {
            if let Some(s) = seed {
                self.seed = Some(s.trim().parse().map_err(|_| Error::Config {
                    line: None,
                    message: format!("{SEED_VAR}=`{s}` is not an unsigned integer"),
                })?);
            }
        }
        if self.out.is_none() {
            self.out = out.filter(|o| !o.is_empty()).map(PathBuf::from);
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance of one run. `config` is the effective document, so running it
/// again reproduces every listed file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub time_budget_s: Option<f64>,
    pub within_budget: Option<bool>,
    pub threads: usize,
    pub horizon: usize,
    pub initial_parameters_sha256: String,
    pub files: Vec<FileRecord>,
    pub config: String,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(&self.config)
    }
}

/// Reads a TOML config, or the echoed config of a `manifest.json`.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        Manifest::load(path)?.experiment()
    } else {
        ExperimentConfig::from_file(path)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

/// Applies overrides, executes, and writes artifacts plus `manifest.json`.
pub fn run_config(mut config: ExperimentConfig, options: &RunOptions) -> Result<RunSummary> {
    if let Some(seed) = options.seed {
        config.seed = seed;
        config.validate()?;
    }
    let out_dir = options
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&config.name));
    let pool = match options.threads {
        Some(0) => return Err(invalid("--threads must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let (artifacts, threads) = pool.install(|| Ok::<_, Error>((execute(&config)?, rayon::current_num_threads())))?;
    let wall_time_s = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        std::fs::write(out_dir.join(&a.name), &a.bytes)?;
        files.push(FileRecord {
            path: a.name.clone(),
            sha256: a.sha256(),
            bytes: a.bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        name: config.name.clone(),
        kind: config.kind,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s,
        time_budget_s: config.time_budget,
        within_budget: config.time_budget.map(|b| wall_time_s <= b),
        threads,
        horizon: config.horizon()?,
        initial_parameters_sha256: initial_parameters_hash(&config)?,
        files,
        config: config.to_toml_string()?,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    std::fs::write(out_dir.join("manifest.json"), json)?;
    Ok(RunSummary { out_dir, manifest })
}
