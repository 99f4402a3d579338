//! Downlink spectral efficiency as a function of the uplink symbols spent on
//! feedback, and the uplink/downlink Pareto boundary traced by a weighted
//! sum of the two rates.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{qam_feedback_error, FeedbackScheme, SchemeKind, SystemConfig};
use crate::optimizer::OverheadTradeoff;
use crate::search::best_integer_neighbor;

/// One operating point on the uplink/downlink boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub lambda: f64,
    pub t_fb: f64,
    pub t_tr: f64,
    pub r_down_bps: f64,
    pub r_up_bps: f64,
    pub r_factor: f64,
}

/// A λ sample computed by the closed-form stationarity solution and by a
/// direct integer search of the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoSample {
    pub closed_form: ParetoPoint,
    pub numeric: ParetoPoint,
}

/// Net downlink rate for a fixed feedback length with training optimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkRate {
    /// Net per-user rate at the continuous training optimum (nats).
    pub rate: f64,
    pub t_tr: f64,
    /// Net rate at the best integer training length.
    pub rate_int: f64,
    pub t_tr_int: f64,
    /// Analytic upper bound on the optimal training length.
    pub t_tr_bound: f64,
    /// Feedback loss term Δ(T_fb).
    pub loss: f64,
}

/// Δ(T_fb): extra interference caused by imperfect feedback of length
/// `t_fb`. Analog feedback of zero length returns `+∞`.
pub fn feedback_loss(scheme: &FeedbackScheme, t_fb: f64, n_tx: usize, snr: f64) -> Result<f64> {
    feedback_loss_users(scheme, t_fb, n_tx, n_tx, snr)
}

/// Δ(T_fb) when `users` terminals share the feedback symbols. The digital
/// exponent divisor becomes `K(N_t − 1)`.
pub fn feedback_loss_users(scheme: &FeedbackScheme, t_fb: f64, n_tx: usize, users: usize, snr: f64) -> Result<f64> {
    if !(t_fb >= 0.0) {
        return domain(format!("feedback length must be non-negative, got {t_fb}"));
    }
    let divisor = users as f64 * (n_tx as f64 - 1.0);
    Ok(match scheme.kind {
        SchemeKind::TddOpenLoop => 0.0,
        SchemeKind::Analog => {
            if t_fb == 0.0 {
                f64::INFINITY
            } else {
                scheme.theta_fb * users as f64 / n_tx as f64 / t_fb
            }
        }
        SchemeKind::DigitalErrorFree => snr * (-t_fb * snr.ln_1p() / divisor).exp(),
        SchemeKind::DigitalQam => {
            let m = scheme.qam_order_or_default() as f64;
            snr * (-t_fb * m.ln() / divisor).exp()
        }
    })
}

/// Probability that the feedback message survives (QAM only; 1 otherwise).
pub(crate) fn message_survival(scheme: &FeedbackScheme, snr: f64, t_fb: f64, n_tx: usize) -> Result<f64> {
    match scheme.kind {
        SchemeKind::DigitalQam => Ok(1.0 - qam_feedback_error(scheme.qam_order_or_default(), snr, t_fb, n_tx)?),
        _ => Ok(1.0),
    }
}

/// `max_{T_tr ∈ [N_t, T]} (1 − T_tr/T)(rate − ln(1 + (N_t−1)/T_tr + Δ))`,
/// solved as the open-loop problem with `rate → rate − ln(1+Δ)` and
/// `N_t − 1 → (N_t − 1)/(1 + Δ)`.
pub(crate) fn optimize_training(rate: f64, loss: f64, n_tx: usize, block_len: f64) -> Result<DownlinkRate> {
    let nt = n_tx as f64;
    if block_len < nt {
        return Err(Error::Infeasible(format!("block length {block_len} shorter than N_t = {n_tx}")));
    }
    let reduced = rate - loss.ln_1p();
    if !(reduced > 0.0) {
        return Ok(DownlinkRate { rate: 0.0, t_tr: nt, rate_int: 0.0, t_tr_int: nt, t_tr_bound: nt, loss });
    }
    let problem = OverheadTradeoff { rate: reduced, theta: (nt - 1.0) / (1.0 + loss), block_len };
    let found = problem.maximize(nt);
    let value = |x: f64| problem.value(x).max(0.0);
    let (t_int, v_int) = best_integer_neighbor(value, found.x, nt, block_len);
    Ok(DownlinkRate {
        rate: found.value.max(0.0),
        t_tr: found.x,
        rate_int: v_int,
        t_tr_int: t_int,
        t_tr_bound: problem.upper_bound(),
        loss,
    })
}

/// w(T_fb): the net downlink per-user rate with training re-optimized for
/// the given feedback length. QAM rates carry the message-survival factor.
pub fn w_of_tfb(config: &SystemConfig, scheme: &FeedbackScheme, t_fb: f64) -> Result<DownlinkRate> {
    config.validate()?;
    let loss = feedback_loss(scheme, t_fb, config.n_tx, config.snr)?;
    let mut out = optimize_training(config.r_zf(), loss, config.n_tx, config.block_len)?;
    let survive = message_survival(scheme, config.snr, t_fb, config.n_tx)?;
    out.rate *= survive;
    out.rate_int *= survive;
    Ok(out)
}

/// `r = (1 − sqrt((N_t−1)/(T R_zf))) / (1 + sqrt(R_zf (N_t−1)/T))`.
pub fn r_factor(config: &SystemConfig) -> f64 {
    let r = config.r_zf();
    let nt1 = config.n_tx as f64 - 1.0;
    let t = config.block_len;
    (1.0 - (nt1 / (t * r)).sqrt()) / (1.0 + (r * nt1 / t).sqrt())
}

/// Separable lower bound `R_zf − 2 sqrt(R_zf(N_t−1)/T) − r·Δ(T_fb)`.
pub fn w_lower_bounds(config: &SystemConfig, scheme: &FeedbackScheme, t_fb: f64) -> Result<f64> {
    config.validate()?;
    let r = config.r_zf();
    let nt1 = config.n_tx as f64 - 1.0;
    let loss = feedback_loss(scheme, t_fb, config.n_tx, config.snr)?;
    Ok(r - 2.0 * (r * nt1 / config.block_len).sqrt() - r_factor(config) * loss)
}

/// Largest feedback length that fits both the block and the uplink band.
pub fn max_feedback_len(config: &SystemConfig, frame_time: f64) -> f64 {
    config.block_len.min(config.uplink_bw * frame_time)
}

/// Stationary feedback length of the weighted sum `λR_down + (1−λ)R_up`.
pub fn tfb_of_lambda(config: &SystemConfig, scheme: &FeedbackScheme, lambda: f64) -> Result<f64> {
    tfb_of_lambda_with_r(config, scheme, lambda, r_factor(config), config.coherence_time)
}

pub(crate) fn tfb_of_lambda_with_r(
    config: &SystemConfig,
    scheme: &FeedbackScheme,
    lambda: f64,
    r: f64,
    frame_time: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return domain(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    config.validate()?;
    let nt = config.n_tx as f64;
    let c = nt * (nt - 1.0);
    let t = config.block_len;
    let odds = lambda / (1.0 - lambda);
    let c_up = config.uplink_eff;
    let raw = match scheme.kind {
        SchemeKind::TddOpenLoop => 0.0,
        SchemeKind::Analog => (r * scheme.theta_fb * t * odds / c_up).sqrt(),
        SchemeKind::DigitalErrorFree | SchemeKind::DigitalQam => {
            let ln_base = if scheme.kind == SchemeKind::DigitalErrorFree {
                config.snr.ln_1p()
            } else {
                (scheme.qam_order_or_default() as f64).ln()
            };
            c / ln_base * (r * config.snr * ln_base * t * odds / (c * c_up)).ln()
        }
    };
    Ok(raw.clamp(0.0, max_feedback_len(config, frame_time)))
}

/// Converts per-user nats into the bit/s rates of the two links.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinkRates {
    pub down_bw: f64,
    pub users: usize,
    pub up_bw: f64,
    pub up_eff: f64,
    pub frame_time: f64,
}

impl LinkRates {
    pub fn coherence(config: &SystemConfig) -> Self {
        Self {
            down_bw: config.coherence_bw,
            users: config.n_tx,
            up_bw: config.uplink_bw,
            up_eff: config.uplink_eff,
            frame_time: config.coherence_time,
        }
    }

    pub fn frame(config: &SystemConfig) -> Self {
        Self { down_bw: config.block_bw, frame_time: config.block_time, ..Self::coherence(config) }
    }

    pub fn down_bps(&self, w: f64) -> f64 {
        self.down_bw * self.users as f64 * w / LN_2
    }

    /// `N_t (W_up − T_fb/T_c) C_up`, in bit/s.
    pub fn up_bps(&self, t_fb: f64) -> f64 {
        self.users as f64 * (self.up_bw - t_fb / self.frame_time) * self.up_eff / LN_2
    }
}

/// Shared machinery of the AWGN and delayed-feedback boundaries.
pub(crate) fn trace_boundary<W, C>(
    lambda_grid: &[f64],
    t_fb_max: f64,
    rates: LinkRates,
    r: f64,
    closed_form: C,
    w: W,
) -> Result<Vec<ParetoSample>>
where
    W: Fn(f64) -> Result<DownlinkRate>,
    C: Fn(f64) -> Result<f64>,
{
    let n_max = t_fb_max.floor() as usize;
    let table: Vec<DownlinkRate> = (0..=n_max).map(|t| w(t as f64)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let t_cf = closed_form(lambda)?.round().min(n_max as f64);
        let cf = &table[t_cf as usize];
        let closed = ParetoPoint {
            lambda,
            t_fb: t_cf,
            t_tr: cf.t_tr_int,
            r_down_bps: rates.down_bps(cf.rate_int),
            r_up_bps: rates.up_bps(t_cf),
            r_factor: r,
        };
        let (best_t, best) = table
            .iter()
            .enumerate()
            .map(|(t, d)| (t, lambda * rates.down_bps(d.rate_int) + (1.0 - lambda) * rates.up_bps(t as f64)))
            .fold((0usize, f64::NEG_INFINITY), |acc, (t, v)| if v > acc.1 { (t, v) } else { acc });
        debug_assert!(best.is_finite());
        let d = &table[best_t];
        let numeric = ParetoPoint {
            lambda,
            t_fb: best_t as f64,
            t_tr: d.t_tr_int,
            r_down_bps: rates.down_bps(d.rate_int),
            r_up_bps: rates.up_bps(best_t as f64),
            r_factor: r,
        };
        out.push(ParetoSample { closed_form: closed, numeric });
    }
    out.sort_by(|a, b| a.numeric.t_fb.total_cmp(&b.numeric.t_fb).then(a.closed_form.lambda.total_cmp(&b.closed_form.lambda)));
    Ok(out)
}

/// Uplink/downlink boundary for the AWGN feedback link, one sample per λ.
pub fn pareto_boundary(config: &SystemConfig, scheme: &FeedbackScheme, lambda_grid: &[f64]) -> Result<Vec<ParetoSample>> {
    config.validate()?;
    if let Some(bad) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return domain(format!("lambda grid must lie in (0, 1), found {bad}"));
    }
    let r = r_factor(config);
    trace_boundary(
        lambda_grid,
        max_feedback_len(config, config.coherence_time),
        LinkRates::coherence(config),
        r,
        |l| tfb_of_lambda(config, scheme, l),
        |t| w_of_tfb(config, scheme, t),
    )
}

/// True when neither point is at least as good in both rates and strictly
/// better in one.
pub fn mutually_non_dominated(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    let dominates = |x: &ParetoPoint, y: &ParetoPoint| {
        x.r_down_bps >= y.r_down_bps && x.r_up_bps >= y.r_up_bps && (x.r_down_bps > y.r_down_bps || x.r_up_bps > y.r_up_bps)
    };
    !dominates(a, b) && !dominates(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn feedback_loss_values() {
        let a = FeedbackScheme::analog(4);
        let d = FeedbackScheme::digital(4);
        assert_relative_eq!(feedback_loss(&a, 30.0, 4, 10.0).unwrap(), 0.4);
        assert_relative_eq!(feedback_loss(&d, 0.0, 4, 10.0).unwrap(), 10.0);
        assert_relative_eq!(feedback_loss(&d, 30.0, 4, 10.0).unwrap(), 10.0 * 11f64.powf(-2.5), max_relative = 1e-13);
        assert!(feedback_loss(&a, 0.0, 4, 10.0).unwrap().is_infinite());
        assert!(feedback_loss(&a, -1.0, 4, 10.0).is_err());
    }

    #[test]
    fn zero_loss_matches_open_loop_optimum() {
        let tdd = crate::optimizer::optimize_tdd(&cfg()).unwrap();
        let w = w_of_tfb(&cfg(), &FeedbackScheme::tdd(4), 0.0).unwrap();
        assert_relative_eq!(w.rate, tdd.continuous_net_rate, max_relative = 1e-9);
        assert_relative_eq!(w.t_tr, tdd.continuous_split.t_tr, epsilon = 1e-5);
    }

    #[test]
    fn analog_starved_feedback_gives_zero_rate() {
        let w = w_of_tfb(&cfg(), &FeedbackScheme::analog(4), 0.0).unwrap();
        assert_eq!(w.rate, 0.0);
    }

    #[test]
    fn r_factor_value() {
        assert!((r_factor(&cfg()) - 0.7823).abs() < 1e-4);
    }

    #[test]
    fn lambda_outside_unit_interval_rejected() {
        let a = FeedbackScheme::analog(4);
        assert!(tfb_of_lambda(&cfg(), &a, 0.0).is_err());
        assert!(tfb_of_lambda(&cfg(), &a, 1.0).is_err());
        assert!(pareto_boundary(&cfg(), &a, &[0.5, 1.2]).is_err());
    }

    #[test]
    fn closed_form_clamped_to_block() {
        let d = FeedbackScheme::analog(4);
        let t = tfb_of_lambda(&cfg(), &d, 1.0 - 1e-12).unwrap();
        assert_eq!(t, 200.0);
        let t = tfb_of_lambda(&cfg(), &FeedbackScheme::digital(4), 1e-9).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn uplink_rate_affine_in_feedback() {
        let lr = LinkRates::coherence(&cfg());
        let slope = (lr.up_bps(50.0) - lr.up_bps(10.0)) / 40.0;
        assert_relative_eq!(slope, -4.0 * cfg().uplink_eff / cfg().coherence_time / LN_2, max_relative = 1e-12);
    }
}
