//! Simulation settings: flags over config file over `VC_WORKERS` over defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vcorr::{SimConfig, StepDist};

use crate::args::{Format, SimulateArgs};
use crate::error::CliError;

pub const WORKERS_ENV: &str = "VC_WORKERS";
const CSV_MANIFEST_PREFIX: &str = "# manifest: ";

/// The fully resolved parameter set of a `simulate` run, as recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub max_moment: usize,
    pub bins: usize,
    pub step_dist: StepDist,
    pub format: Format,
}

impl SimSettings {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n: self.n,
            paths: self.paths,
            seed: self.seed,
            workers: self.workers,
            step_dist: self.step_dist,
            max_moment: self.max_moment,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSettings {
    n: Option<usize>,
    paths: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    #[serde(alias = "max-moment")]
    max_moment: Option<usize>,
    bins: Option<usize>,
    #[serde(alias = "step-dist")]
    step_dist: Option<StepDist>,
    format: Option<Format>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_file(path: &Path) -> Result<FileSettings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let bad = |e: &dyn std::fmt::Display| usage(format!("invalid config {}: {e}", path.display()));
    if path.extension().is_some_and(|x| x == "toml") {
        return toml::from_str(&text).map_err(|e| bad(&e));
    }
    let json = match text.strip_prefix(CSV_MANIFEST_PREFIX) {
        Some(rest) => rest.lines().next().unwrap_or_default(),
        None => &text,
    };
    let value: Value = serde_json::from_str(json).map_err(|e| bad(&e))?;
    // A full output file, a bare manifest, or a plain settings object.
    let manifest = value.get("manifest").unwrap_or(&value);
    let settings = match manifest.get("config") {
        Some(config) => {
            let command = manifest.get("command").and_then(Value::as_str).unwrap_or("simulate");
            if command != "simulate" {
                return Err(usage(format!(
                    "{} records a `{command}` run, not `simulate`",
                    path.display()
                )));
            }
            config.clone()
        }
        None => value.clone(),
    };
    serde_json::from_value(settings).map_err(|e| bad(&e))
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn resolve(args: &SimulateArgs) -> Result<SimSettings, CliError> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileSettings::default(),
    };
    let defaults = SimConfig::default();
    let workers = match args.workers.or(file.workers) {
        Some(w) => w,
        None => env_workers()?.unwrap_or(defaults.workers),
    };
    let settings = SimSettings {
        n: args.n.or(file.n).unwrap_or(defaults.n),
        paths: args.paths.or(file.paths).unwrap_or(defaults.paths),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        workers,
        max_moment: args.max_moment.or(file.max_moment).unwrap_or(defaults.max_moment),
        bins: args.bins.or(file.bins).unwrap_or(50),
        step_dist: args.step_dist.map(StepDist::from).or(file.step_dist).unwrap_or(defaults.step_dist),
        format: args.format.or(file.format).unwrap_or(Format::Json),
    };
    settings.sim_config().validate().map_err(|e| usage(e.to_string()))?;
    if settings.bins < 10 {
        return Err(usage(format!("bins must be at least 10, got {}", settings.bins)));
    }
    Ok(settings)
}
