use std::f64::consts::LN_2;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::beam::zf_beamformers;
use super::channel::{cn01, mmse_estimate_with, ChannelBatch};
use super::rng::{stream_rng, Purpose};
use super::rvq::quantize_for_rate;
use super::{block_moments, mean_stderr, CMatrix};
use crate::error::{domain, Result};
use crate::model::{
    digital_gap_from_bits, gap_g, qam_feedback_error, rate_gap, FeedbackScheme, ResourceSplit, SchemeKind, SystemConfig,
};

/// How the base station learns the downlink channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsitSource {
    Perfect,
    /// MMSE estimate from `t_tr` pilot symbols, known exactly at the BS.
    Mmse { t_tr: f64 },
    /// MMSE estimate sent as unquantized symbols over `t_fb` uplink uses.
    MmseAnalog { t_tr: f64, t_fb: f64 },
    /// Direction of the MMSE estimate quantized with `bits` RVQ bits.
    MmseRvq { t_tr: f64, bits: f64 },
    /// RVQ sent uncoded with square `order`-QAM; a message hit by a symbol
    /// error is lost and that user's rate counts as zero.
    MmseQam { t_tr: f64, t_fb: f64, order: u32 },
}

impl CsitSource {
    /// The source matching a feedback scheme at a given split.
    pub fn for_scheme(scheme: &FeedbackScheme, split: ResourceSplit, n_tx: usize, snr: f64) -> Self {
        let t_tr = split.t_tr;
        match scheme.kind {
            SchemeKind::TddOpenLoop => Self::Mmse { t_tr },
            SchemeKind::Analog => Self::MmseAnalog { t_tr, t_fb: split.t_fb },
            SchemeKind::DigitalErrorFree => Self::MmseRvq { t_tr, bits: split.t_fb * snr.ln_1p() / LN_2 / n_tx as f64 },
            SchemeKind::DigitalQam => Self::MmseQam { t_tr, t_fb: split.t_fb, order: scheme.qam_order_or_default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub blocks: usize,
}

/// Closed-form rate lower bound `R_zf − ln(1 + g)` matching a source; the
/// QAM source carries the `1 − P_e` factor.
pub fn lower_bound_for(config: &SystemConfig, source: &CsitSource) -> Result<f64> {
    let n = config.n_tx;
    let r = config.r_zf();
    let rho = config.snr;
    Ok(match *source {
        CsitSource::Perfect => r,
        CsitSource::Mmse { t_tr } => r - rate_gap(gap_g(&FeedbackScheme::tdd(n), ResourceSplit::new(t_tr, 0.0), rho, n)?)?,
        CsitSource::MmseAnalog { t_tr, t_fb } => {
            r - rate_gap(gap_g(&FeedbackScheme::analog(n), ResourceSplit::new(t_tr, t_fb), rho, n)?)?
        }
        CsitSource::MmseRvq { t_tr, bits } => r - rate_gap(digital_gap_from_bits(bits, n, rho, t_tr)?)?,
        CsitSource::MmseQam { t_tr, t_fb, order } => {
            let g = gap_g(&FeedbackScheme::qam(n, order), ResourceSplit::new(t_tr, t_fb), rho, n)?;
            (1.0 - qam_feedback_error(order, rho, t_fb, n)?) * (r - rate_gap(g)?)
        }
    })
}

fn rows_quantized<R: Rng + ?Sized>(est: &CMatrix, bits: f64, rng: &mut R) -> CMatrix {
    let mut q = est.clone();
    for k in 0..est.nrows() {
        let d: DVector<Complex64> = est.row(k).transpose();
        let c = quantize_for_rate(&d, bits, rng);
        q.set_row(k, &c.transpose());
    }
    q
}

/// Per-user rates `ln(1 + SINR_k)` of beams `v` on true channels `h` with
/// equal power `ρ/N_t`.
pub(crate) fn zf_user_rates(h: &CMatrix, v: &CMatrix, snr: f64, n_tx: usize) -> Vec<f64> {
    let m = h * v;
    let p = snr / n_tx as f64;
    (0..m.nrows())
        .map(|k| {
            let sig = m[(k, k)].norm_sqr() * p;
            let int: f64 = (0..m.ncols()).filter(|&j| j != k).map(|j| m[(k, j)].norm_sqr()).sum::<f64>() * p;
            (sig / (1.0 + int)).ln_1p()
        })
        .collect()
}

fn block_rate(config: &SystemConfig, source: &CsitSource, batch: &ChannelBatch, b: u64) -> Result<f64> {
    let n = config.n_tx;
    let rho = config.snr;
    let h = batch.block(b);
    let mut train = stream_rng(batch.seed, Purpose::TrainingNoise, b);
    let mut lost = vec![false; n];
    let est = match *source {
        CsitSource::Perfect => h.clone(),
        CsitSource::Mmse { t_tr } => mmse_estimate_with(&h, t_tr, rho, n, &mut train)?.0,
        CsitSource::MmseAnalog { t_tr, t_fb } => {
            if !(t_fb > 0.0) {
                return domain("analog feedback needs t_fb > 0");
            }
            let (est, err) = mmse_estimate_with(&h, t_tr, rho, n, &mut train)?;
            // each coefficient is repeated T_fb/N_t² times at uplink SNR ρ
            let gain = (rho * t_fb / (n * n) as f64).sqrt();
            let var = 1.0 - err;
            let w = gain * var / (1.0 + gain * gain * var);
            let mut fb = stream_rng(batch.seed, Purpose::FeedbackNoise, b);
            est.map(|x| (x * gain + cn01(&mut fb)) * w)
        }
        CsitSource::MmseRvq { t_tr, bits } => {
            let est = mmse_estimate_with(&h, t_tr, rho, n, &mut train)?.0;
            rows_quantized(&est, bits, &mut stream_rng(batch.seed, Purpose::Quantizer, b))
        }
        CsitSource::MmseQam { t_tr, t_fb, order } => {
            let est = mmse_estimate_with(&h, t_tr, rho, n, &mut train)?.0;
            let bits = t_fb / n as f64 * (order as f64).log2();
            let p_e = qam_feedback_error(order, rho, t_fb, n)?;
            let mut err_rng = stream_rng(batch.seed, Purpose::MessageError, b);
            for l in lost.iter_mut() {
                *l = err_rng.random::<f64>() < p_e;
            }
            rows_quantized(&est, bits, &mut stream_rng(batch.seed, Purpose::Quantizer, b))
        }
    };
    // a singular estimate has probability zero; such a block delivers nothing
    let Ok(v) = zf_beamformers(&est) else { return Ok(0.0) };
    let rates = zf_user_rates(&h, &v, rho, n);
    let total: f64 = rates.iter().zip(&lost).filter(|(_, l)| !**l).map(|(r, _)| r).sum();
    Ok(total / n as f64)
}

/// Ergodic per-user rate of zero-forcing with the given CSIT, averaged over
/// `blocks` independent Rayleigh blocks with `K = N_t` users.
pub fn ergodic_rate_mc(config: &SystemConfig, source: &CsitSource, blocks: usize, seed: u64) -> Result<McEstimate> {
    config.validate()?;
    if blocks < 2 {
        return domain("Monte Carlo needs at least two blocks");
    }
    // validate the source once so block evaluation cannot fail
    let batch = ChannelBatch::new(config.n_tx, config.n_tx, seed, blocks);
    block_rate(config, source, &batch, 0)?;
    let (s, s2, n) = block_moments(blocks, |b| block_rate(config, source, &batch, b).unwrap_or(0.0));
    let (mean, stderr) = mean_stderr(s, s2, n);
    Ok(McEstimate { mean, stderr, blocks })
}
