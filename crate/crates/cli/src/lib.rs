//! Experiment driver for `csit-core`: figure registry, TOML experiment
//! specs, CSV/JSON artifacts and the Monte Carlo validation suite.

pub mod figures;
pub mod output;
pub mod spec;
pub mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use csit_core::lab::RzfCache;

pub use figures::{figure, registry, FigureInfo, FigureOutput, Table};
pub use spec::{ExperimentSpec, Sweep, SweepVar};
pub use validate::{validate_bounds, CheckResult, ValidateOptions, ValidationReport};

/// Version string baked in at build time (`git describe` when available).
pub const VERSION: &str = env!("CSIT_BUILD_VERSION");

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "CSIT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Run(#[from] csit_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Files written by one experiment run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: Vec<PathBuf>,
    pub sidecar: PathBuf,
    pub mc_summaries: Option<PathBuf>,
    pub wall_clock_s: f64,
}

/// Runs a spec and writes its tables under `out_dir`, plus a sidecar JSON
/// and, for Monte Carlo figures, a JSON-lines summary file. `cache` is
/// shared across runs.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, cache: &RzfCache) -> Result<RunReport, CliError> {
    spec.validate()?;
    let info = spec.info()?;
    let start = Instant::now();
    let result = (info.run)(spec, cache)?;
    let wall_clock_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir)?;
    let mut csv = Vec::new();
    for t in &result.tables {
        let path = out_dir.join(&t.file);
        output::write_csv(&path, t)?;
        csv.push(path);
    }
    let mc_summaries = if result.mc.is_empty() {
        None
    } else {
        let path = out_dir.join(format!("{}.mc.jsonl", spec.name));
        output::write_jsonl(&path, &result.mc)?;
        Some(path)
    };
    let sidecar = out_dir.join(format!("{}.json", spec.name));
    output::write_sidecar(&sidecar, spec, &csv, wall_clock_s)?;
    Ok(RunReport { csv, sidecar, mc_summaries, wall_clock_s })
}

/// Configures the global thread pool from [`THREADS_ENV`] when set.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Spec(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Some(n))
}
