//! Configuration-driven experiment runner on top of `dampgap`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod presets;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::{canonical, parse, ExperimentConfig};
use error::{CliError, CliResult};
use report::{Bundle, Manifest, RunStatus};

pub const DEFAULT_OUTPUT: &str = "dampgap-out";

/// Where a configuration comes from.
#[derive(Debug, Clone)]
pub enum Source {
    File(PathBuf),
    Preset(String),
}

pub fn load(source: &Source) -> CliResult<ExperimentConfig> {
    let text = match source {
        Source::File(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        Source::Preset(name) => presets::find(name)
            .ok_or_else(|| {
                let known: Vec<&str> = presets::PRESETS.iter().map(|p| p.name).collect();
                CliError::invalid("preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
            })?
            .text
            .to_string(),
    };
    parse(&text).map_err(|e| CliError::invalid("config", e))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads actually in use, for the manifest.
    pub threads: usize,
}

pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Vec<String>,
}

pub fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new(DEFAULT_OUTPUT).to_path_buf())
}

/// Validates, runs and writes the bundle. On a numerical failure the tables
/// already written stay in place and the manifest records the failure.
pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> CliResult<RunReport> {
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    let dir = output_dir(&cfg, opts);
    cfg.output = None;
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(CliError::Validation(problems));
    }
    let seed = cfg.seed.unwrap_or(0);
    let mut bundle = Bundle::create(&dir)?;
    let start = Instant::now();
    let result = experiments::run(&cfg, seed, &mut bundle);
    let (status, error) = match result {
        Ok(()) => (RunStatus::Ok, None),
        Err(CliError::Numerical(msg)) => (RunStatus::NumericalFailure, Some(msg)),
        Err(other) => return Err(other),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name().into(),
        seed,
        threads: opts.threads,
        backend: if dampgap::exec::is_parallel() { "rayon" } else { "sequential" },
        grid_budget_bytes: dampgap::spectral::grid_budget().to_string(),
        config: canonical(&cfg),
        status,
        error: error.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        tables: bundle.tables.clone(),
        plots: bundle.plots.clone(),
        summary: bundle.summary.clone(),
    };
    bundle.write_manifest(&manifest)?;
    match error {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(RunReport {
            dir,
            summary: bundle.summary,
        }),
    }
}
