//! Experiment files.
//!
//! ```toml
//! name = "fig2"
//! seed = 7
//! schemes = ["tdd", "analog", "digital", "qam"]
//!
//! [config]
//! snr_db = 10.0
//! block_len = 200
//!
//! [sweep]
//! variable = "block_len"
//! start = 50
//! stop = 2000
//! step = 50
//! ```
//!
//! Omitted fields take the registered figure's defaults.

use std::path::{Path, PathBuf};

use csit_core::model::{bits_to_nats, db_to_linear, FeedbackScheme, SchemeKind, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::figures::{figure, FigureInfo};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    BlockLen,
    FeedbackLen,
    Lambda,
    SpeedKmh,
}

impl SweepVar {
    pub fn column(self) -> &'static str {
        match self {
            Self::BlockLen => "T",
            Self::FeedbackLen => "t_fb",
            Self::Lambda => "lambda",
            Self::SpeedKmh => "speed_kmh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVar,
    pub grid: Vec<f64>,
}

impl Sweep {
    pub fn range(variable: SweepVar, start: f64, stop: f64, step: f64) -> Self {
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Self { variable, grid: (0..=n).map(|i| start + i as f64 * step).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub config: SystemConfig,
    pub schemes: Vec<FeedbackScheme>,
    pub sweep: Sweep,
    pub seed: u64,
    pub output: PathBuf,
    /// Monte Carlo blocks per estimate.
    pub blocks: usize,
    /// Mobile speeds (km/h) for the delayed-feedback figures.
    pub speeds_kmh: Vec<f64>,
    /// Candidate user counts for the user-selection figures.
    pub users: Vec<usize>,
    /// Fixed feedback length where a figure needs one.
    pub t_fb: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_tx: Option<usize>,
    n_users: Option<usize>,
    snr_db: Option<f64>,
    block_len: Option<f64>,
    coherence_time: Option<f64>,
    coherence_bw: Option<f64>,
    block_time: Option<f64>,
    block_bw: Option<f64>,
    uplink_bw: Option<f64>,
    /// Uplink spectral efficiency in bit/s/Hz.
    uplink_eff_bits: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<SweepVar>,
    grid: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    seed: Option<u64>,
    output: Option<PathBuf>,
    schemes: Option<Vec<String>>,
    qam_order: Option<u32>,
    blocks: Option<usize>,
    speeds_kmh: Option<Vec<f64>>,
    users: Option<Vec<usize>>,
    t_fb: Option<f64>,
    config: Option<RawConfig>,
    sweep: Option<RawSweep>,
}

fn spec_err(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

/// Parses scheme labels (`tdd`, `analog`, `digital`, `qam`).
pub fn parse_schemes(labels: &[String], n_tx: usize, qam_order: u32) -> Result<Vec<FeedbackScheme>, CliError> {
    labels
        .iter()
        .map(|l| {
            let kind = SchemeKind::parse(l).map_err(|e| spec_err(e.to_string()))?;
            Ok(match kind {
                SchemeKind::DigitalQam => FeedbackScheme::qam(n_tx, qam_order),
                k => FeedbackScheme::new(k, n_tx),
            })
        })
        .collect()
}

impl ExperimentSpec {
    /// Default spec of a registered figure.
    pub fn for_figure(name: &str) -> Result<Self, CliError> {
        let info = figure(name).ok_or_else(|| spec_err(format!("unknown figure '{name}'")))?;
        Ok(Self { name: info.name.to_string(), ..(info.defaults)() })
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| spec_err(e.to_string()))?;
        let mut spec = Self::for_figure(&raw.name)?;
        if let Some(c) = raw.config {
            let cfg = &mut spec.config;
            if let Some(v) = c.n_tx {
                cfg.n_tx = v;
            }
            if let Some(v) = c.n_users {
                cfg.n_users = v;
            }
            if let Some(v) = c.snr_db {
                cfg.snr = db_to_linear(v);
            }
            if let Some(v) = c.block_len {
                cfg.block_len = v;
            }
            if let Some(v) = c.coherence_time {
                cfg.coherence_time = v;
            }
            if let Some(v) = c.coherence_bw {
                cfg.coherence_bw = v;
            }
            if let Some(v) = c.block_time {
                cfg.block_time = v;
            }
            if let Some(v) = c.block_bw {
                cfg.block_bw = v;
            }
            if let Some(v) = c.uplink_bw {
                cfg.uplink_bw = v;
            }
            if let Some(v) = c.uplink_eff_bits {
                cfg.uplink_eff = bits_to_nats(v);
            }
            if cfg.n_users < cfg.n_tx {
                cfg.n_users = cfg.n_tx;
            }
        }
        if raw.schemes.is_some() || raw.qam_order.is_some() {
            let labels = raw
                .schemes
                .unwrap_or_else(|| spec.schemes.iter().map(|s| s.kind.label().to_string()).collect());
            spec.schemes = parse_schemes(&labels, spec.config.n_tx, raw.qam_order.unwrap_or(4))?;
        } else {
            // keep default schemes consistent with an overridden antenna count
            let labels: Vec<String> = spec.schemes.iter().map(|s| s.kind.label().to_string()).collect();
            let order = spec.schemes.iter().find_map(|s| s.qam_order).unwrap_or(4);
            spec.schemes = parse_schemes(&labels, spec.config.n_tx, order)?;
        }
        if let Some(s) = raw.sweep {
            if let Some(v) = s.variable {
                if v != spec.sweep.variable {
                    return Err(spec_err(format!(
                        "figure '{}' sweeps {:?}, not {v:?}",
                        spec.name, spec.sweep.variable
                    )));
                }
            }
            match (s.grid, s.start, s.stop, s.step) {
                (Some(g), None, None, None) => spec.sweep.grid = g,
                (None, Some(a), Some(b), Some(h)) => {
                    if !(h > 0.0) || !(b >= a) {
                        return Err(spec_err("sweep range needs step > 0 and stop ≥ start"));
                    }
                    spec.sweep = Sweep::range(spec.sweep.variable, a, b, h);
                }
                (None, None, None, None) => {}
                _ => return Err(spec_err("sweep takes either `grid` or all of `start`, `stop`, `step`")),
            }
        }
        if let Some(v) = raw.seed {
            spec.seed = v;
        }
        if let Some(v) = raw.output {
            spec.output = v;
        }
        if let Some(v) = raw.blocks {
            spec.blocks = v;
        }
        if let Some(v) = raw.speeds_kmh {
            spec.speeds_kmh = v;
        }
        if let Some(v) = raw.users {
            spec.users = v;
        }
        if let Some(v) = raw.t_fb {
            spec.t_fb = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| spec_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn info(&self) -> Result<&'static FigureInfo, CliError> {
        figure(&self.name).ok_or_else(|| spec_err(format!("unknown figure '{}'", self.name)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.info()?;
        self.config.validate().map_err(|e| spec_err(e.to_string()))?;
        for s in &self.schemes {
            s.validate().map_err(|e| spec_err(e.to_string()))?;
        }
        let g = &self.sweep.grid;
        if g.is_empty() {
            return Err(spec_err("sweep grid is empty"));
        }
        if g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|x| !x.is_finite()) {
            return Err(spec_err("sweep grid must be finite and strictly increasing"));
        }
        if self.sweep.variable == SweepVar::Lambda && g.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(spec_err("lambda grid must lie in (0, 1)"));
        }
        if self.blocks < 2 {
            return Err(spec_err("blocks must be at least 2"));
        }
        if self.users.iter().any(|&k| k < self.config.n_tx) {
            return Err(spec_err("user counts must be at least n_tx"));
        }
        if self.speeds_kmh.iter().any(|v| !(*v >= 0.0)) {
            return Err(spec_err("speeds must be non-negative"));
        }
        Ok(())
    }
}
