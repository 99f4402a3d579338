//! Monte Carlo checks of the closed-form model: rate lower bounds,
//! quantization distortion scaling and estimation error variance.

use csit_core::lab::{
    ergodic_rate_mc, lower_bound_for, mmse_estimate_with, mmse_error_variance, rvq_quantize_with, stream_rng,
    ChannelBatch, CsitSource, Purpose,
};
use csit_core::model::{FeedbackScheme, ResourceSplit, SchemeKind, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub quick: bool,
    pub seed: u64,
    /// Added to every closed-form bound; a positive value must make the
    /// bound checks fail.
    pub bound_inflation: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { quick: false, seed: 1, bound_inflation: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Distance to the failure threshold; negative when failing.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

fn lower_bound_checks(config: &SystemConfig, opts: &ValidateOptions) -> Result<Vec<CheckResult>, CliError> {
    let (grid, blocks): (&[f64], usize) = if opts.quick { (&[16.0, 40.0], 20_000) } else { (&[8.0, 16.0, 40.0, 80.0], 100_000) };
    let n = config.n_tx;
    let mut out = Vec::new();
    for kind in SchemeKind::ALL {
        let scheme = if kind == SchemeKind::DigitalQam { FeedbackScheme::qam(n, 4) } else { FeedbackScheme::new(kind, n) };
        for &t_tr in grid {
            for &t_fb in grid {
                if kind == SchemeKind::TddOpenLoop && t_fb != grid[0] {
                    continue;
                }
                let src = CsitSource::for_scheme(&scheme, ResourceSplit::new(t_tr, t_fb), n, config.snr);
                let mc = ergodic_rate_mc(config, &src, blocks, opts.seed)?;
                let bound = lower_bound_for(config, &src)? + opts.bound_inflation;
                let margin = mc.mean + 3.0 * mc.stderr - bound;
                out.push(CheckResult {
                    name: format!("lower_bound/{}/t_tr={t_tr}/t_fb={t_fb}", kind.label()),
                    pass: margin >= 0.0,
                    margin,
                    detail: format!("mc {:.5} ± {:.5}, bound {:.5}", mc.mean, mc.stderr, bound),
                });
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn distortion_checks(opts: &ValidateOptions) -> Result<Vec<CheckResult>, CliError> {
    let (bits, draws): (&[u32], usize) = if opts.quick { (&[4, 6, 8], 3_000) } else { (&[4, 6, 8, 10], 20_000) };
    let mut out = Vec::new();
    for n in [2usize, 3, 4] {
        let batch = ChannelBatch::new(1, n, opts.seed, draws);
        let mut logs = Vec::new();
        for &b in bits {
            let total = (0..draws as u64)
                .into_par_iter()
                .map(|d| {
                    let mut rng = stream_rng(opts.seed, Purpose::Quantizer, d);
                    let dir = batch.block(d).row(0).transpose();
                    rvq_quantize_with(&dir, b, &mut rng).map(|r| r.distortion)
                })
                .collect::<Result<Vec<f64>, _>>()?
                .iter()
                .sum::<f64>();
            logs.push((total / draws as f64).log2());
        }
        let x: Vec<f64> = bits.iter().map(|&b| b as f64).collect();
        let s = slope(&x, &logs);
        let target = -1.0 / (n as f64 - 1.0);
        let rel = (s / target - 1.0).abs();
        out.push(CheckResult {
            name: format!("distortion_slope/n_tx={n}"),
            pass: rel <= 0.10,
            margin: 0.10 - rel,
            detail: format!("slope {s:.4} vs {target:.4}"),
        });
    }
    Ok(out)
}

fn estimation_checks(opts: &ValidateOptions) -> Result<Vec<CheckResult>, CliError> {
    let blocks = if opts.quick { 2_000 } else { 20_000 };
    let n = 4;
    let mut out = Vec::new();
    for t_tr in [4.0, 24.0, 80.0] {
        for snr in [1.0, 10.0, 100.0] {
            let batch = ChannelBatch::new(n, n, opts.seed, blocks);
            let (mut s, mut s2, mut count) = (0.0, 0.0, 0usize);
            for b in 0..blocks as u64 {
                let h = batch.block(b);
                let mut rng = stream_rng(opts.seed, Purpose::TrainingNoise, b);
                let (est, _) = mmse_estimate_with(&h, t_tr, snr, n, &mut rng)?;
                for e in (&h - &est).iter() {
                    let v = e.norm_sqr();
                    s += v;
                    s2 += v * v;
                    count += 1;
                }
            }
            let mean = s / count as f64;
            let se = ((s2 / count as f64 - mean * mean) / count as f64).sqrt();
            let theory = mmse_error_variance(t_tr, snr, n);
            let margin = 3.0 * se - (mean - theory).abs();
            out.push(CheckResult {
                name: format!("estimation/t_tr={t_tr}/snr={snr}"),
                pass: margin >= 0.0,
                margin,
                detail: format!("empirical {mean:.6} ± {se:.6}, theory {theory:.6}"),
            });
        }
    }
    Ok(out)
}

/// Runs every check at `config`.
pub fn validate_bounds(config: &SystemConfig, opts: &ValidateOptions) -> Result<ValidationReport, CliError> {
    let mut checks = lower_bound_checks(config, opts)?;
    checks.extend(distortion_checks(opts)?);
    checks.extend(estimation_checks(opts)?);
    Ok(ValidationReport { pass: checks.iter().all(|c| c.pass), checks })
}
