//! Temporally correlated fading with delayed feedback: one-step prediction
//! and filtering MMSE, the resulting rate gaps, and the training length and
//! uplink/downlink tradeoff under prediction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{FeedbackScheme, ResourceSplit, SchemeKind, SystemConfig};
use crate::optimizer::OptimizationResult;
use crate::search::{best_integer_neighbor, golden_section_max};
use crate::tradeoff::{
    feedback_loss, max_feedback_len, message_survival, tfb_of_lambda_with_r, trace_boundary, DownlinkRate, LinkRates,
    ParetoSample,
};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;
pub const DEFAULT_CARRIER_HZ: f64 = 2.0e9;
/// Default number of samples for tabulated spectra.
pub const DEFAULT_SPECTRUM_POINTS: usize = 4096;

/// Power spectral density of the fading process on `[−F, F]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DopplerSpectrum {
    /// `S(ξ) = 1/(2F)`.
    Uniform,
    /// Samples on an equispaced grid covering `[−F, F]`, endpoints included.
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerModel {
    /// Mobile speed in m/s.
    pub speed: f64,
    pub carrier: f64,
    pub block_time: f64,
    /// Normalized Doppler shift F.
    pub shift: f64,
    pub spectrum: DopplerSpectrum,
    /// Feedback delay in blocks: 0 for filtering, 1 for prediction.
    pub delay: u8,
}

/// `F = v f_c T_f / c`. Errors when `F ≥ 1/2`.
pub fn doppler_shift(speed: f64, carrier: f64, block_time: f64) -> Result<f64> {
    if !(speed >= 0.0) || !(carrier > 0.0) || !(block_time > 0.0) {
        return domain(format!("invalid Doppler inputs v={speed}, f_c={carrier}, T_f={block_time}"));
    }
    let f = speed * carrier * block_time / SPEED_OF_LIGHT;
    if f >= 0.5 {
        return Err(Error::Model(format!("normalized Doppler shift {f} must stay below 1/2")));
    }
    Ok(f)
}

pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / 3.6
}

impl DopplerModel {
    /// Uniform-spectrum model.
    pub fn new(speed: f64, carrier: f64, block_time: f64, delay: u8) -> Result<Self> {
        if delay > 1 {
            return Err(Error::Model(format!("feedback delay must be 0 or 1 blocks, got {delay}")));
        }
        let shift = doppler_shift(speed, carrier, block_time)?;
        Ok(Self { speed, carrier, block_time, shift, spectrum: DopplerSpectrum::Uniform, delay })
    }

    /// One-step prediction at the default carrier, speed in km/h.
    pub fn prediction_kmh(kmh: f64, block_time: f64) -> Result<Self> {
        Self::new(kmh_to_ms(kmh), DEFAULT_CARRIER_HZ, block_time, 1)
    }

    /// Replaces the spectrum by samples of `density` on `points` grid
    /// points. The samples must integrate to one and be strictly positive.
    pub fn with_tabulated<S: Fn(f64) -> f64>(mut self, density: S, points: usize) -> Result<Self> {
        if self.shift == 0.0 {
            return Err(Error::Model("tabulated spectrum needs a non-zero Doppler shift".into()));
        }
        if points < 2 {
            return domain("tabulated spectrum needs at least two points");
        }
        let f = self.shift;
        let step = 2.0 * f / (points - 1) as f64;
        let samples: Vec<f64> = (0..points).map(|i| density(-f + i as f64 * step)).collect();
        self.spectrum = DopplerSpectrum::Tabulated(samples);
        self.check_spectrum()?;
        Ok(self)
    }

    fn grid_step(&self, n: usize) -> f64 {
        2.0 * self.shift / (n - 1) as f64
    }

    fn check_spectrum(&self) -> Result<()> {
        if let DopplerSpectrum::Tabulated(s) = &self.spectrum {
            if s.len() < 2 {
                return Err(Error::Model("tabulated spectrum needs at least two samples".into()));
            }
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Model("spectrum samples must be positive inside the support".into()));
            }
            let mass = trapezoid(s, self.grid_step(s.len()));
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::Model(format!("spectrum integrates to {mass}, expected 1")));
            }
        }
        Ok(())
    }

    /// `κ = (N_t − 1)(ρ/(2F N_t))^{2F}`, with the `F → 0` limit `N_t − 1`.
    pub fn kappa(&self, n_tx: usize, snr: f64) -> f64 {
        let nt = n_tx as f64;
        (nt - 1.0) * xlog_power(snr / (2.0 * nt), self.shift)
    }

    /// Normalized estimation error `ε_d(δ)/δ` in its bound form, evaluated
    /// at `δ = N_t/(T_tr ρ)`.
    fn error_ratio_bound(&self, n_tx: usize, snr: f64, t_tr: f64) -> f64 {
        let f = self.shift;
        // (ρT_tr/(2FN_t))^{2F}
        let p = xlog_power(snr * t_tr / (2.0 * n_tx as f64), f);
        match self.delay {
            0 => 1.0 / (1.0 + 1.0 / p),
            _ => p,
        }
    }
}

/// `(c/F)^{2F}` computed in log space with the `F → 0` limit of one.
fn xlog_power(c: f64, f: f64) -> f64 {
    if f == 0.0 {
        1.0
    } else {
        (2.0 * f * (c.ln() - f.ln())).exp()
    }
}

fn trapezoid(samples: &[f64], step: f64) -> f64 {
    let n = samples.len();
    let inner: f64 = samples[1..n - 1].iter().sum();
    step * (inner + 0.5 * (samples[0] + samples[n - 1]))
}

/// Per-component observation noise `δ = N_t/(T_tr ρ)`.
pub fn obs_noise(n_tx: usize, t_tr: f64, snr: f64) -> f64 {
    n_tx as f64 / (t_tr * snr)
}

/// One-step prediction MMSE `ε_1(δ) = δ^{1−2F} exp(∫ log(δ + S)) − δ`.
pub fn prediction_mmse(model: &DopplerModel, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return domain(format!("observation noise must be positive, got {delta}"));
    }
    model.check_spectrum()?;
    let f = model.shift;
    if f == 0.0 {
        return Ok(0.0);
    }
    Ok(match &model.spectrum {
        DopplerSpectrum::Uniform => delta * (2.0 * f * (1.0 / (2.0 * f * delta)).ln_1p()).exp_m1(),
        DopplerSpectrum::Tabulated(s) => {
            let logs: Vec<f64> = s.iter().map(|v| (delta + v).ln()).collect();
            let integral = trapezoid(&logs, model.grid_step(s.len()));
            delta * (integral - 2.0 * f * delta.ln()).exp_m1()
        }
    })
}

/// Filtering MMSE `δε_1/(δ + ε_1)`; tends to `δ` as `ε_1 → ∞`.
pub fn filtering_mmse(delta: f64, eps1: f64) -> f64 {
    if eps1.is_infinite() {
        delta
    } else {
        delta * eps1 / (delta + eps1)
    }
}

/// Which form of the normalized error `ε_d/δ` enters the rate gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapForm {
    /// Uniform-spectrum closed-form upper bounds.
    Bound,
    /// The exact MMSE of the model's spectrum.
    Exact,
}

/// Rate-gap bound `log(1 + (N_t−1)/T_tr · ε_d/δ + Δ(T_fb))` in its bound form.
pub fn delayed_rate_gap(
    model: &DopplerModel,
    split: ResourceSplit,
    snr: f64,
    n_tx: usize,
    scheme: &FeedbackScheme,
) -> Result<f64> {
    delayed_rate_gap_with(model, split, snr, n_tx, scheme, GapForm::Bound)
}

pub fn delayed_rate_gap_with(
    model: &DopplerModel,
    split: ResourceSplit,
    snr: f64,
    n_tx: usize,
    scheme: &FeedbackScheme,
    form: GapForm,
) -> Result<f64> {
    if split.t_tr < n_tx as f64 {
        return domain(format!("training length {} below N_t = {n_tx}", split.t_tr));
    }
    let loss = feedback_loss(scheme, split.t_fb, n_tx, snr)?;
    let ratio = match form {
        GapForm::Bound => model.error_ratio_bound(n_tx, snr, split.t_tr),
        GapForm::Exact => {
            let delta = obs_noise(n_tx, split.t_tr, snr);
            let eps1 = prediction_mmse(model, delta)?;
            let eps = if model.delay == 0 { filtering_mmse(delta, eps1) } else { eps1 };
            eps / delta
        }
    };
    Ok((1.0 + (n_tx as f64 - 1.0) / split.t_tr * ratio + loss).ln())
}

/// Training optimum under correlated fading for a fixed feedback length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOptimum {
    pub optimization: OptimizationResult,
    /// `(κT/R_zf)^{1/(2−F)}`.
    pub closed_form_t_tr: f64,
    /// Analytic upper bound on the optimal training length.
    pub t_tr_bound: f64,
    pub kappa: f64,
    pub loss: f64,
}

impl PredictionOptimum {
    pub fn downlink(&self) -> DownlinkRate {
        let o = &self.optimization;
        DownlinkRate {
            rate: o.continuous_net_rate,
            t_tr: o.continuous_split.t_tr,
            rate_int: o.net_rate,
            t_tr_int: o.split.t_tr,
            t_tr_bound: self.t_tr_bound,
            loss: self.loss,
        }
    }
}

/// Maximizes `(1 − T_tr/T)[R_zf − log(1 + (N_t−1)/T_tr·ε_d/δ + Δ(T_fb))]`
/// over `T_tr ∈ [N_t, T]`, using the bound form of `ε_d/δ`.
pub fn optimize_training_prediction(
    config: &SystemConfig,
    model: &DopplerModel,
    scheme: &FeedbackScheme,
    t_fb: f64,
) -> Result<PredictionOptimum> {
    config.validate()?;
    scheme.validate()?;
    let nt = config.n_tx as f64;
    let t = config.block_len;
    if t < nt {
        return Err(Error::Infeasible(format!("block length {t} shorter than N_t = {nt}")));
    }
    let r = config.r_zf();
    let loss = feedback_loss(scheme, t_fb, config.n_tx, config.snr)?;
    let survive = message_survival(scheme, config.snr, t_fb, config.n_tx)?;
    let objective = |x: f64| {
        let gap = (1.0 + (nt - 1.0) / x * model.error_ratio_bound(config.n_tx, config.snr, x) + loss).ln();
        ((1.0 - x / t) * (r - gap)).max(0.0) * survive
    };
    let found = golden_section_max(objective, nt, t, 1e-7);
    let (t_int, v_int) = best_integer_neighbor(objective, found.x, nt, t);

    let f = model.shift;
    let kappa = model.kappa(config.n_tx, config.snr);
    let exponent = 1.0 / (2.0 - f);
    let closed_form_t_tr = ((kappa * t / r).ln() * exponent).exp();
    let reduced = r - loss.ln_1p();
    let t_tr_bound = if reduced > 0.0 {
        ((kappa * t / ((1.0 + loss) * reduced)).ln() * exponent).exp()
    } else {
        f64::INFINITY
    };
    let optimization = OptimizationResult {
        scheme: scheme.kind,
        split: ResourceSplit::new(t_int, t_fb),
        net_rate: v_int,
        continuous_split: ResourceSplit::new(found.x, t_fb),
        continuous_net_rate: found.value,
        upper_bound_split: ResourceSplit::new(t_tr_bound, t_fb),
        effective_gap_bound: None,
        lagrange_mu: None,
        boundary: found.x <= nt + 1e-6 || found.x >= t - 1e-6,
        qam_order: (scheme.kind == SchemeKind::DigitalQam).then(|| scheme.qam_order_or_default()),
        feedback_error: (scheme.kind == SchemeKind::DigitalQam).then_some(1.0 - survive),
        iterations: found.iterations,
    };
    Ok(PredictionOptimum { optimization, closed_form_t_tr, t_tr_bound, kappa, loss })
}

/// `(1 − T_tr/T)/(1 + (N_t−1)/T_tr·ε_d/δ)` at the closed-form training length.
pub fn delayed_r_factor(config: &SystemConfig, model: &DopplerModel) -> f64 {
    let nt = config.n_tx as f64;
    let kappa = model.kappa(config.n_tx, config.snr);
    let t_tr = ((kappa * config.block_len / config.r_zf()).ln() / (2.0 - model.shift)).exp();
    let t_tr = t_tr.clamp(nt, config.block_len);
    let term = (nt - 1.0) / t_tr * model.error_ratio_bound(config.n_tx, config.snr, t_tr);
    (1.0 - t_tr / config.block_len) / (1.0 + term)
}

/// Uplink/downlink boundary per frame of duration `T_f` and bandwidth `W_f`
/// under delayed feedback.
pub fn delayed_pareto(
    config: &SystemConfig,
    model: &DopplerModel,
    scheme: &FeedbackScheme,
    lambda_grid: &[f64],
) -> Result<Vec<ParetoSample>> {
    config.validate()?;
    if let Some(bad) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return domain(format!("lambda grid must lie in (0, 1), found {bad}"));
    }
    let r = delayed_r_factor(config, model);
    trace_boundary(
        lambda_grid,
        max_feedback_len(config, config.block_time),
        LinkRates::frame(config),
        r,
        |l| tfb_of_lambda_with_r(config, scheme, l, r, config.block_time),
        |t_fb| Ok(optimize_training_prediction(config, model, scheme, t_fb)?.downlink()),
    )
}

/// Downlink sum rate at one mobile speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedRate {
    /// Speed in m/s.
    pub speed: f64,
    pub shift: f64,
    pub t_tr: f64,
    pub net_rate: f64,
    pub sum_rate_bps: f64,
}

/// Downlink sum rate versus mobile speed (m/s) for a fixed feedback length,
/// one-step prediction at the default carrier.
pub fn rate_vs_speed(config: &SystemConfig, scheme: &FeedbackScheme, t_fb: f64, speeds: &[f64]) -> Result<Vec<SpeedRate>> {
    let links = LinkRates::frame(config);
    speeds
        .iter()
        .map(|&v| {
            let model = DopplerModel::new(v, DEFAULT_CARRIER_HZ, config.block_time, 1)?;
            let opt = optimize_training_prediction(config, &model, scheme, t_fb)?;
            let o = &opt.optimization;
            Ok(SpeedRate {
                speed: v,
                shift: model.shift,
                t_tr: o.split.t_tr,
                net_rate: o.net_rate,
                sum_rate_bps: links.down_bps(o.net_rate),
            })
        })
        .collect()
}
