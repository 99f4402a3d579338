//! System configuration, feedback schemes and the closed-form rate, gap and
//! feedback-error expressions.
//!
//! Every rate in this crate is in nats per channel use per user. Conversion
//! to bits or bit/s happens only when a [`RateResult`] is reported.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{q_function, scaled_e1};

/// Converts a decibel SNR into a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Physical and block parameters of the downlink/uplink system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas at the base station.
    pub n_tx: usize,
    /// Users with data at the base station (K ≥ n_tx).
    pub n_users: usize,
    /// Linear downlink SNR `P / N0`.
    pub snr: f64,
    /// Channel uses per coherence block.
    pub block_len: f64,
    /// Coherence time in seconds.
    pub coherence_time: f64,
    /// Coherence bandwidth in Hz.
    pub coherence_bw: f64,
    /// Resource-block duration in seconds (correlated-fading model).
    pub block_time: f64,
    /// Resource-block bandwidth in Hz (correlated-fading model).
    pub block_bw: f64,
    /// Uplink bandwidth in Hz.
    pub uplink_bw: f64,
    /// Uplink spectral efficiency per user, nats per channel use.
    pub uplink_eff: f64,
}

impl Default for SystemConfig {
    /// Four antennas at 10 dB on a 200 kHz × 1 ms block (T = 200) with a
    /// symmetric 200 kHz uplink at 1.512 bit/s/Hz.
    fn default() -> Self {
        Self {
            n_tx: 4,
            n_users: 4,
            snr: 10.0,
            block_len: 200.0,
            coherence_time: 1e-3,
            coherence_bw: 200e3,
            block_time: 1e-3,
            block_bw: 200e3,
            uplink_bw: 200e3,
            uplink_eff: bits_to_nats(1.512),
        }
    }
}

impl SystemConfig {
    /// Checks positivity and `K ≥ N_t`.
    pub fn validate(&self) -> Result<()> {
        if self.n_tx < 2 {
            return Err(Error::InvalidConfig(format!("n_tx must be ≥ 2, got {}", self.n_tx)));
        }
        if self.n_users < self.n_tx {
            return Err(Error::InvalidConfig(format!(
                "n_users ({}) must be ≥ n_tx ({})",
                self.n_users, self.n_tx
            )));
        }
        let positive = [
            ("snr", self.snr),
            ("block_len", self.block_len),
            ("coherence_time", self.coherence_time),
            ("coherence_bw", self.coherence_bw),
            ("block_time", self.block_time),
            ("block_bw", self.block_bw),
            ("uplink_bw", self.uplink_bw),
            ("uplink_eff", self.uplink_eff),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `T = W_c·T_c`, required by the block-fading (model 1/2) analyses.
    pub fn check_coherence_geometry(&self) -> Result<()> {
        self.validate()?;
        let t = self.coherence_bw * self.coherence_time;
        if (t - self.block_len).abs() > 1e-6 * self.block_len {
            return Err(Error::InvalidConfig(format!(
                "block_len {} != coherence_bw·coherence_time = {t}",
                self.block_len
            )));
        }
        Ok(())
    }

    /// `T = W_f·T_f`, required by the correlated-fading (model 3) analysis.
    pub fn check_frame_geometry(&self) -> Result<()> {
        self.validate()?;
        let t = self.block_bw * self.block_time;
        if (t - self.block_len).abs() > 1e-6 * self.block_len {
            return Err(Error::InvalidConfig(format!(
                "block_len {} != block_bw·block_time = {t}",
                self.block_len
            )));
        }
        Ok(())
    }

    /// Same system with a different block length; coherence time and frame
    /// duration are rescaled so both geometry invariants still hold.
    pub fn with_block_len(&self, block_len: f64) -> Self {
        Self {
            block_len,
            coherence_time: block_len / self.coherence_bw,
            block_time: block_len / self.block_bw,
            ..self.clone()
        }
    }

    pub fn with_snr(&self, snr: f64) -> Self {
        Self { snr, ..self.clone() }
    }

    /// Perfect-CSIT zero-forcing rate per user for this configuration.
    pub fn r_zf(&self) -> f64 {
        zf_rate_perfect_csit(self.n_tx, self.snr).expect("validated configuration")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Open-loop CSIT from uplink pilots via channel reciprocity.
    TddOpenLoop,
    /// Unquantized channel coefficients sent as modulation symbols.
    Analog,
    /// RVQ bits delivered error-free at the uplink AWGN capacity.
    DigitalErrorFree,
    /// RVQ bits sent as uncoded square QAM; any symbol error voids the message.
    DigitalQam,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::TddOpenLoop,
        SchemeKind::Analog,
        SchemeKind::DigitalErrorFree,
        SchemeKind::DigitalQam,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::TddOpenLoop => "tdd",
            SchemeKind::Analog => "analog",
            SchemeKind::DigitalErrorFree => "digital",
            SchemeKind::DigitalQam => "qam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdd" | "tdd_open_loop" => Ok(SchemeKind::TddOpenLoop),
            "analog" => Ok(SchemeKind::Analog),
            "digital" | "digital_error_free" => Ok(SchemeKind::DigitalErrorFree),
            "qam" | "digital_qam" => Ok(SchemeKind::DigitalQam),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A CSIT acquisition scheme together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackScheme {
    pub kind: SchemeKind,
    /// Training weight θ_tr.
    pub theta_tr: f64,
    /// Feedback weight θ_fb (zero only for open-loop TDD).
    pub theta_fb: f64,
    /// Square-QAM constellation size (QAM scheme only).
    pub qam_order: Option<u32>,
    /// Quantization bits, when fixed externally (digital kinds).
    pub fb_bits: Option<f64>,
}

impl FeedbackScheme {
    /// Scheme with the default weights θ_tr = N_t − 1, θ_fb = N_t(N_t − 1).
    pub fn new(kind: SchemeKind, n_tx: usize) -> Self {
        let nt = n_tx as f64;
        Self {
            kind,
            theta_tr: nt - 1.0,
            theta_fb: if kind == SchemeKind::TddOpenLoop { 0.0 } else { nt * (nt - 1.0) },
            qam_order: (kind == SchemeKind::DigitalQam).then_some(4),
            fb_bits: None,
        }
    }

    pub fn tdd(n_tx: usize) -> Self {
        Self::new(SchemeKind::TddOpenLoop, n_tx)
    }

    pub fn analog(n_tx: usize) -> Self {
        Self::new(SchemeKind::Analog, n_tx)
    }

    pub fn digital(n_tx: usize) -> Self {
        Self::new(SchemeKind::DigitalErrorFree, n_tx)
    }

    pub fn qam(n_tx: usize, order: u32) -> Self {
        Self { qam_order: Some(order), ..Self::new(SchemeKind::DigitalQam, n_tx) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_tr > 0.0) {
            return Err(Error::InvalidConfig("theta_tr must be positive".into()));
        }
        if self.theta_fb < 0.0 {
            return Err(Error::InvalidConfig("theta_fb must be non-negative".into()));
        }
        if (self.theta_fb == 0.0) != (self.kind == SchemeKind::TddOpenLoop) {
            return Err(Error::InvalidConfig("theta_fb = 0 exactly when the scheme is open-loop TDD".into()));
        }
        if self.kind == SchemeKind::DigitalQam {
            let m = self.qam_order.ok_or_else(|| Error::InvalidConfig("QAM scheme needs qam_order".into()))?;
            square_qam_side(m)?;
        }
        Ok(())
    }

    pub fn qam_order_or_default(&self) -> u32 {
        self.qam_order.unwrap_or(4)
    }
}

/// Channel uses spent on training and on feedback within one block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceSplit {
    pub t_tr: f64,
    pub t_fb: f64,
}

impl ResourceSplit {
    pub fn new(t_tr: f64, t_fb: f64) -> Self {
        Self { t_tr, t_fb }
    }

    pub fn total(&self) -> f64 {
        self.t_tr + self.t_fb
    }
}

/// A per-user rate with its overhead-discounted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub per_user_rate: f64,
    pub net_per_user: f64,
    pub sum_rate_bps: Option<f64>,
}

impl RateResult {
    pub fn new(per_user_rate: f64, net_per_user: f64) -> Self {
        Self { per_user_rate, net_per_user, sum_rate_bps: None }
    }

    /// Attaches a bit/s sum rate: `W·N_served·net/ln 2`.
    pub fn with_bandwidth(mut self, bandwidth_hz: f64, served: usize) -> Self {
        self.sum_rate_bps = Some(sum_rate_bps(self.net_per_user, bandwidth_hz, served));
        self
    }
}

/// `W·N_served·rate/ln 2`.
pub fn sum_rate_bps(rate_nats: f64, bandwidth_hz: f64, served: usize) -> f64 {
    bandwidth_hz * served as f64 * rate_nats / LN_2
}

/// Per-user ergodic rate of ZF beamforming with perfect CSIT and `K = N_t`
/// equal-power users: `E[ln(1 + ρ/N_t·X)]` with `X ~ Exp(1)`, which equals
/// `e^{N_t/ρ} E1(N_t/ρ)`.
pub fn zf_rate_perfect_csit(n_tx: usize, snr: f64) -> Result<f64> {
    if n_tx < 2 {
        return domain(format!("n_tx must be ≥ 2, got {n_tx}"));
    }
    if !(snr >= 0.0) {
        return domain(format!("snr must be non-negative, got {snr}"));
    }
    if snr == 0.0 {
        return Ok(0.0);
    }
    scaled_e1(n_tx as f64 / snr)
}

/// The interference-to-noise scaling `g(T_tr, T_fb)` of the rate gap
/// `ln(1 + g)`.
///
/// For the QAM scheme only the quantization-plus-estimation part is
/// returned; the message-error weighting is applied by the caller.
pub fn gap_g(scheme: &FeedbackScheme, split: ResourceSplit, snr: f64, n_tx: usize) -> Result<f64> {
    if !(split.t_tr > 0.0) {
        return domain(format!("training length must be positive, got {}", split.t_tr));
    }
    let nt = n_tx as f64;
    let training = |theta: f64| theta / split.t_tr;
    let needs_fb = || -> Result<()> {
        if split.t_fb < 0.0 {
            return domain(format!("feedback length must be non-negative, got {}", split.t_fb));
        }
        Ok(())
    };
    match scheme.kind {
        SchemeKind::TddOpenLoop => Ok(training(scheme.theta_tr)),
        SchemeKind::Analog => {
            if !(split.t_fb > 0.0) {
                return domain("analog feedback needs a positive feedback length");
            }
            Ok(training(scheme.theta_tr) + scheme.theta_fb / split.t_fb)
        }
        SchemeKind::DigitalErrorFree => {
            needs_fb()?;
            Ok(training(nt - 1.0) + digital_quantization_loss(snr, (1.0 + snr).ln(), split.t_fb, n_tx))
        }
        SchemeKind::DigitalQam => {
            needs_fb()?;
            let m = scheme.qam_order_or_default() as f64;
            Ok(training(nt - 1.0) + digital_quantization_loss(snr, m.ln(), split.t_fb, n_tx))
        }
    }
}

/// `ρ·exp(−T_fb·ln(base)/(N_t(N_t−1)))`: the RVQ distortion term when each
/// feedback symbol carries `log2(base)` bits.
pub(crate) fn digital_quantization_loss(snr: f64, ln_base: f64, t_fb: f64, n_tx: usize) -> f64 {
    let nt = n_tx as f64;
    snr * (-t_fb * ln_base / (nt * (nt - 1.0))).exp()
}

/// `ln(1 + g)`.
pub fn rate_gap(g: f64) -> Result<f64> {
    if !(g >= 0.0) {
        return domain(format!("g must be non-negative, got {g}"));
    }
    Ok(g.ln_1p())
}

/// `(1 − overhead/T)·max(0, R_zf − gap)`.
pub fn net_spectral_efficiency(r_zf: f64, gap_nats: f64, t_overhead: f64, block_len: f64) -> Result<f64> {
    if !(t_overhead >= 0.0) || t_overhead > block_len {
        return domain(format!("overhead {t_overhead} must lie in [0, {block_len}]"));
    }
    Ok((1.0 - t_overhead / block_len) * (r_zf - gap_nats).max(0.0))
}

fn square_qam_side(m: u32) -> Result<u32> {
    let side = (m as f64).sqrt().round() as u32;
    if m < 4 || side * side != m || !side.is_power_of_two() {
        return domain(format!("QAM order must be a square power of two (4, 16, 64, ...), got {m}"));
    }
    Ok(side)
}

/// Uncoded square-QAM symbol error probability at SNR ρ:
/// `1 − (1 − 2(1 − 1/√M) Q(√(3ρ/(M−1))))²`.
pub fn qam_symbol_error(m: u32, snr: f64) -> Result<f64> {
    let side = square_qam_side(m)? as f64;
    if !(snr > 0.0) {
        return domain(format!("snr must be positive, got {snr}"));
    }
    let p_row = 2.0 * (1.0 - 1.0 / side) * q_function((3.0 * snr / (m as f64 - 1.0)).sqrt());
    Ok(1.0 - (1.0 - p_row).powi(2))
}

/// Probability that a feedback message of `T_fb/N_t` symbols contains at
/// least one symbol error: `1 − (1 − P_s)^{T_fb/N_t}` (fractional exponents
/// allowed).
pub fn feedback_error_prob(p_s: f64, t_fb: f64, n_tx: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_s) {
        return domain(format!("symbol error probability must lie in [0, 1], got {p_s}"));
    }
    if !(t_fb >= 0.0) {
        return domain(format!("feedback length must be non-negative, got {t_fb}"));
    }
    let uses = t_fb / n_tx as f64;
    Ok(-((uses * (-p_s).ln_1p()).exp_m1()))
}

/// Message error probability of the QAM scheme for a given feedback length.
pub fn qam_feedback_error(m: u32, snr: f64, t_fb: f64, n_tx: usize) -> Result<f64> {
    feedback_error_prob(qam_symbol_error(m, snr)?, t_fb, n_tx)
}

/// Digital gap with an explicit bit budget:
/// `(N_t−1)/T_tr + ρ·2^{−B/(N_t−1)}`.
pub fn digital_gap_from_bits(bits: f64, n_tx: usize, snr: f64, t_tr: f64) -> Result<f64> {
    if !(bits >= 0.0) {
        return domain(format!("bit budget must be non-negative, got {bits}"));
    }
    if !(t_tr > 0.0) {
        return domain(format!("training length must be positive, got {t_tr}"));
    }
    let nt1 = n_tx as f64 - 1.0;
    Ok(nt1 / t_tr + snr * (-bits * LN_2 / nt1).exp())
}

/// Net per-user rate of `scheme` at a given split, including the feedback
/// message error weighting for QAM.
pub fn net_rate(config: &SystemConfig, scheme: &FeedbackScheme, split: ResourceSplit) -> Result<f64> {
    let r = config.r_zf();
    let g = gap_g(scheme, split, config.snr, config.n_tx)?;
    let overhead = match scheme.kind {
        SchemeKind::TddOpenLoop => split.t_tr,
        _ => split.total(),
    };
    let net = net_spectral_efficiency(r, rate_gap(g)?, overhead, config.block_len)?;
    Ok(match scheme.kind {
        SchemeKind::DigitalQam => {
            let pe = qam_feedback_error(scheme.qam_order_or_default(), config.snr, split.t_fb, config.n_tx)?;
            (1.0 - pe) * net
        }
        _ => net,
    })
}
