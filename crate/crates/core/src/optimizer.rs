//! Joint training/feedback optimization when both phases consume downlink
//! channel uses of the same coherence block.
//!
//! The net rate `(1 − (T_tr + T_fb)/T)(R_zf − ln(1 + g(T_tr, T_fb)))` is
//! maximized in two steps: for a fixed total overhead `T_t` the inner problem
//! minimizes `g`, then a one-dimensional concave search picks `T_t`.
//! Continuous optima are rounded by checking the integer neighbours of each
//! coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    digital_quantization_loss, gap_g, net_rate, qam_feedback_error, FeedbackScheme, ResourceSplit,
    SchemeKind, SystemConfig,
};
use crate::search::{bisect_root, golden_section_max, maximize_by_derivative, SearchResult};

/// Convergence tolerance of the outer searches, in channel uses.
pub const SEARCH_TOL: f64 = 1e-6;

/// Constellations tried by the QAM optimizer.
pub const QAM_ORDERS: [u32; 4] = [4, 16, 64, 256];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub scheme: SchemeKind,
    /// Integer allocation actually reported.
    pub split: ResourceSplit,
    /// Net per-user rate (nats) at `split`.
    pub net_rate: f64,
    /// Real-valued optimum before rounding.
    pub continuous_split: ResourceSplit,
    pub continuous_net_rate: f64,
    /// Analytic upper bounds `T̃_tr` (and the matching feedback length).
    pub upper_bound_split: ResourceSplit,
    /// `2·sqrt(θ R_zf / T)`; only a guaranteed bound for TDD and analog.
    pub effective_gap_bound: Option<f64>,
    /// KKT multiplier μ of the inner allocation.
    pub lagrange_mu: Option<f64>,
    /// The inner allocation sat on a constraint boundary.
    pub boundary: bool,
    pub qam_order: Option<u32>,
    pub feedback_error: Option<f64>,
    pub iterations: usize,
}

/// `f(x) = (1 − x/T)(A − ln(1 + θ/x))`: overhead `x` against a rate gap
/// that decays as `θ/x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OverheadTradeoff {
    pub rate: f64,
    pub theta: f64,
    pub block_len: f64,
}

impl OverheadTradeoff {
    pub fn value(&self, x: f64) -> f64 {
        (1.0 - x / self.block_len) * (self.rate - (self.theta / x).ln_1p())
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = self.block_len;
        self.theta * (1.0 - x / t) / (x * (x + self.theta)) - (self.rate - (self.theta / x).ln_1p()) / t
    }

    pub fn maximize(&self, lo: f64) -> SearchResult {
        maximize_by_derivative(|x| self.value(x), |x| self.derivative(x), lo, self.block_len, SEARCH_TOL)
    }

    /// Root of the linearized gradient: `sqrt(θT/A)`.
    pub fn upper_bound(&self) -> f64 {
        (self.theta * self.block_len / self.rate).sqrt()
    }
}

/// `2·sqrt(θ·R_zf/T)`: bound on `R_zf − f(T_tr*)`.
pub fn effective_gap_bound(theta: f64, r_zf: f64, block_len: f64) -> f64 {
    2.0 * (theta * r_zf / block_len).sqrt()
}

fn check_feasible(config: &SystemConfig, min_overhead: f64) -> Result<()> {
    config.validate()?;
    if config.block_len < min_overhead {
        return Err(Error::Infeasible(format!(
            "block length {} shorter than the minimum overhead {min_overhead}",
            config.block_len
        )));
    }
    Ok(())
}

/// Rounds a continuous split to the best of its integer neighbours that
/// keeps `t_tr ≥ N_t` and fits in the block.
fn round_split(
    config: &SystemConfig,
    scheme: &FeedbackScheme,
    cont: ResourceSplit,
) -> Result<(ResourceSplit, f64)> {
    let nt = config.n_tx as f64;
    let t = config.block_len;
    let fb_needed = scheme.kind == SchemeKind::Analog;
    let mut best: Option<(ResourceSplit, f64)> = None;
    let fb_candidates: Vec<f64> = if scheme.kind == SchemeKind::TddOpenLoop {
        vec![0.0]
    } else {
        vec![cont.t_fb.floor(), cont.t_fb.ceil()]
    };
    for tr in [cont.t_tr.floor(), cont.t_tr.ceil()] {
        for &fb in &fb_candidates {
            let tr = tr.max(nt);
            let fb = if fb_needed { fb.max(1.0) } else { fb.max(0.0) };
            if tr + fb > t.floor() {
                continue;
            }
            let split = ResourceSplit::new(tr, fb);
            let v = net_rate(config, scheme, split)?;
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((split, v));
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no integer allocation fits the block".into()))
}

/// Open-loop TDD: maximize `(1 − T_tr/T)(R_zf − ln(1 + θ_tr/T_tr))` over
/// `T_tr ∈ [N_t, T]`.
pub fn optimize_tdd(config: &SystemConfig) -> Result<OptimizationResult> {
    optimize_tdd_with(config, &FeedbackScheme::tdd(config.n_tx))
}

fn optimize_tdd_with(config: &SystemConfig, scheme: &FeedbackScheme) -> Result<OptimizationResult> {
    let nt = config.n_tx as f64;
    check_feasible(config, nt)?;
    let r = config.r_zf();
    let problem = OverheadTradeoff { rate: r, theta: scheme.theta_tr, block_len: config.block_len };
    let found = problem.maximize(nt);
    let continuous_split = ResourceSplit::new(found.x, 0.0);
    let (split, rate) = round_split(config, scheme, continuous_split)?;
    Ok(OptimizationResult {
        scheme: SchemeKind::TddOpenLoop,
        split,
        net_rate: rate,
        continuous_split,
        continuous_net_rate: found.value.max(0.0),
        upper_bound_split: ResourceSplit::new(problem.upper_bound(), 0.0),
        effective_gap_bound: Some(effective_gap_bound(scheme.theta_tr, r, config.block_len)),
        lagrange_mu: None,
        boundary: false,
        qam_order: None,
        feedback_error: None,
        iterations: found.iterations,
    })
}

/// KKT split of `θ_tr/T_tr + θ_fb/T_fb` under `T_tr + T_fb = T_t`:
/// `T_tr = sqrt(θ_tr/𝒦)·T_t`, `T_fb = sqrt(θ_fb/𝒦)·T_t` with
/// `𝒦 = (√θ_tr + √θ_fb)²`.
pub fn inner_allocate_analog(theta_tr: f64, theta_fb: f64, t_total: f64) -> ResourceSplit {
    let (a, b) = (theta_tr.sqrt(), theta_fb.sqrt());
    ResourceSplit::new(a / (a + b) * t_total, b / (a + b) * t_total)
}

/// `𝒦 = (√θ_tr + √θ_fb)²`.
pub fn analog_constant(theta_tr: f64, theta_fb: f64) -> f64 {
    (theta_tr.sqrt() + theta_fb.sqrt()).powi(2)
}

pub fn optimize_analog(config: &SystemConfig) -> Result<OptimizationResult> {
    optimize_analog_with(config, &FeedbackScheme::analog(config.n_tx))
}

fn optimize_analog_with(config: &SystemConfig, scheme: &FeedbackScheme) -> Result<OptimizationResult> {
    let nt = config.n_tx as f64;
    let kappa = analog_constant(scheme.theta_tr, scheme.theta_fb);
    let share_tr = (scheme.theta_tr / kappa).sqrt();
    // smallest total overhead that leaves N_t training symbols
    let lo = nt / share_tr;
    check_feasible(config, lo)?;
    let r = config.r_zf();
    let outer = OverheadTradeoff { rate: r, theta: kappa, block_len: config.block_len };
    let found = outer.maximize(lo);
    let continuous_split = inner_allocate_analog(scheme.theta_tr, scheme.theta_fb, found.x);
    let (split, rate) = round_split(config, scheme, continuous_split)?;
    let t_bound = outer.upper_bound();
    Ok(OptimizationResult {
        scheme: SchemeKind::Analog,
        split,
        net_rate: rate,
        continuous_split,
        continuous_net_rate: found.value.max(0.0),
        upper_bound_split: inner_allocate_analog(scheme.theta_tr, scheme.theta_fb, t_bound),
        effective_gap_bound: Some(effective_gap_bound(kappa, r, config.block_len)),
        lagrange_mu: Some(continuous_split.t_tr / scheme.theta_tr.sqrt()),
        boundary: false,
        qam_order: None,
        feedback_error: None,
        iterations: found.iterations,
    })
}

/// Solution of the error-free digital inner problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitalAllocation {
    pub split: ResourceSplit,
    pub mu: f64,
    /// The KKT feedback length was negative; `(t_total, 0)` returned.
    pub boundary: bool,
}

fn digital_kkt(n_tx: usize, snr: f64, mu: f64) -> ResourceSplit {
    let nt = n_tx as f64;
    let c = nt * (nt - 1.0);
    let l = snr.ln_1p();
    ResourceSplit::new(mu * (nt - 1.0).sqrt(), c * (2.0 * mu.ln() + (snr * l / c).ln()) / l)
}

/// Minimizes `(N_t−1)/T_tr + ρ(1+ρ)^{−T_fb/(N_t(N_t−1))}` subject to
/// `T_tr + T_fb = t_total` through the KKT multiplier μ.
pub fn inner_allocate_digital(n_tx: usize, snr: f64, t_total: f64) -> Result<DigitalAllocation> {
    if !(t_total > 0.0) || !(snr > 0.0) || n_tx < 2 {
        return Err(Error::Domain(format!(
            "digital allocation needs positive total ({t_total}) and snr ({snr})"
        )));
    }
    let mu_full = t_total / (n_tx as f64 - 1.0).sqrt();
    if digital_kkt(n_tx, snr, mu_full).t_fb <= 0.0 {
        return Ok(DigitalAllocation { split: ResourceSplit::new(t_total, 0.0), mu: mu_full, boundary: true });
    }
    let excess = |mu: f64| digital_kkt(n_tx, snr, mu).total() - t_total;
    let (mu, _) = bisect_root(excess, 1e-12 * mu_full, mu_full, 1e-15)
        .ok_or_else(|| Error::Infeasible("no KKT multiplier brackets the budget".into()))?;
    let kkt = digital_kkt(n_tx, snr, mu);
    // t_fb is tied to t_tr so the budget holds exactly
    Ok(DigitalAllocation {
        split: ResourceSplit::new(kkt.t_tr, t_total - kkt.t_tr),
        mu,
        boundary: false,
    })
}

/// Inner digital allocation with the identifiability floor `T_tr ≥ N_t`.
fn digital_inner_with_floor(config: &SystemConfig, t_total: f64) -> Result<DigitalAllocation> {
    let nt = config.n_tx as f64;
    let mut alloc = inner_allocate_digital(config.n_tx, config.snr, t_total)?;
    if alloc.split.t_tr < nt {
        alloc.split = ResourceSplit::new(nt, t_total - nt);
        alloc.boundary = true;
    }
    Ok(alloc)
}

pub fn optimize_digital_errorfree(config: &SystemConfig) -> Result<OptimizationResult> {
    let scheme = FeedbackScheme::digital(config.n_tx);
    let nt = config.n_tx as f64;
    check_feasible(config, nt)?;
    let r = config.r_zf();
    let t = config.block_len;
    let objective = |t_total: f64| -> f64 {
        match digital_inner_with_floor(config, t_total) {
            Ok(a) => {
                let g = gap_g(&scheme, a.split, config.snr, config.n_tx).unwrap_or(f64::INFINITY);
                (1.0 - t_total / t) * (r - g.ln_1p())
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let found = golden_section_max(objective, nt, t, SEARCH_TOL);
    let alloc = digital_inner_with_floor(config, found.x)?;
    let (split, rate) = round_split(config, &scheme, alloc.split)?;
    let tr_bound = ((nt - 1.0) * t / r).sqrt();
    Ok(OptimizationResult {
        scheme: SchemeKind::DigitalErrorFree,
        split,
        net_rate: rate,
        continuous_split: alloc.split,
        continuous_net_rate: found.value.max(0.0),
        upper_bound_split: ResourceSplit::new(tr_bound, digital_feedback_for_training(config, tr_bound)),
        effective_gap_bound: None,
        lagrange_mu: Some(alloc.mu),
        boundary: alloc.boundary,
        qam_order: None,
        feedback_error: None,
        iterations: found.iterations,
    })
}

/// KKT feedback length as a function of the training length, obtained by
/// eliminating μ: `N_t(N_t−1)(2 ln T_tr + ln(ρ ln(1+ρ)/(N_t(N_t−1)²)))/ln(1+ρ)`.
pub fn digital_feedback_for_training(config: &SystemConfig, t_tr: f64) -> f64 {
    let nt = config.n_tx as f64;
    let l = config.snr.ln_1p();
    let v = nt * (nt - 1.0) * (2.0 * t_tr.ln() + (config.snr * l / (nt * (nt - 1.0).powi(2))).ln()) / l;
    v.max(0.0)
}

/// Effective rate loss of the QAM scheme for a fixed total overhead:
/// `min_{T_tr} (1 − P_e)·ln(1 + g) + P_e·R_zf`. Returns the loss and the
/// minimizing training length.
pub fn qam_effective_loss(config: &SystemConfig, order: u32, t_total: f64) -> Result<(f64, f64)> {
    let nt = config.n_tx as f64;
    if t_total < nt {
        return Err(Error::Infeasible(format!("total overhead {t_total} below N_t")));
    }
    let r = config.r_zf();
    let ln_m = (order as f64).ln();
    let loss = |t_tr: f64| -> f64 {
        let t_fb = t_total - t_tr;
        let g = (nt - 1.0) / t_tr + digital_quantization_loss(config.snr, ln_m, t_fb, config.n_tx);
        let pe = qam_feedback_error(order, config.snr, t_fb, config.n_tx).unwrap_or(1.0);
        (1.0 - pe) * g.ln_1p() + pe * r
    };
    let found = golden_section_max(|x| -loss(x), nt, t_total, SEARCH_TOL);
    Ok((-found.value, found.x))
}

fn optimize_qam_order(config: &SystemConfig, order: u32) -> Result<OptimizationResult> {
    let scheme = FeedbackScheme::qam(config.n_tx, order);
    let nt = config.n_tx as f64;
    let t = config.block_len;
    let r = config.r_zf();
    let outer = |t_total: f64| -> f64 {
        match qam_effective_loss(config, order, t_total) {
            Ok((loss, _)) => (1.0 - t_total / t) * (r - loss),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // coarse integer scan, then a golden refinement around the best cell
    let mut best = (nt, f64::NEG_INFINITY);
    let mut x = nt.ceil();
    while x <= t {
        let v = outer(x);
        if v > best.1 {
            best = (x, v);
        }
        x += 1.0;
    }
    let found = golden_section_max(outer, (best.0 - 1.0).max(nt), (best.0 + 1.0).min(t), SEARCH_TOL);
    let (_, t_tr) = qam_effective_loss(config, order, found.x)?;
    let continuous_split = ResourceSplit::new(t_tr, found.x - t_tr);
    let (split, rate) = round_split(config, &scheme, continuous_split)?;
    let tr_bound = ((nt - 1.0) * t / r).sqrt();
    Ok(OptimizationResult {
        scheme: SchemeKind::DigitalQam,
        split,
        net_rate: rate,
        continuous_split,
        continuous_net_rate: found.value.max(0.0),
        upper_bound_split: ResourceSplit::new(tr_bound, continuous_split.t_fb),
        effective_gap_bound: None,
        lagrange_mu: None,
        boundary: continuous_split.t_fb <= 0.0,
        qam_order: Some(order),
        feedback_error: Some(qam_feedback_error(order, config.snr, split.t_fb, config.n_tx)?),
        iterations: found.iterations + (t - nt).max(0.0) as usize,
    })
}

/// QAM digital feedback with the constellation chosen from [`QAM_ORDERS`].
pub fn optimize_digital_qam(config: &SystemConfig) -> Result<OptimizationResult> {
    check_feasible(config, config.n_tx as f64)?;
    let mut best: Option<OptimizationResult> = None;
    for order in QAM_ORDERS {
        let res = optimize_qam_order(config, order)?;
        if best.as_ref().map_or(true, |b| res.net_rate > b.net_rate) {
            best = Some(res);
        }
    }
    best.ok_or_else(|| Error::Infeasible("empty constellation set".into()))
}

/// QAM digital feedback with a fixed constellation.
pub fn optimize_digital_qam_fixed(config: &SystemConfig, order: u32) -> Result<OptimizationResult> {
    check_feasible(config, config.n_tx as f64)?;
    FeedbackScheme::qam(config.n_tx, order).validate()?;
    optimize_qam_order(config, order)
}

/// Dispatches on the scheme kind. Custom θ weights are honoured for TDD
/// and analog; a fixed `qam_order` pins the constellation.
pub fn optimize(config: &SystemConfig, scheme: &FeedbackScheme) -> Result<OptimizationResult> {
    scheme.validate()?;
    match scheme.kind {
        SchemeKind::TddOpenLoop => optimize_tdd_with(config, scheme),
        SchemeKind::Analog => optimize_analog_with(config, scheme),
        SchemeKind::DigitalErrorFree => optimize_digital_errorfree(config),
        SchemeKind::DigitalQam => match scheme.qam_order {
            Some(order) => optimize_digital_qam_fixed(config, order),
            None => optimize_digital_qam(config),
        },
    }
}

/// Optimizes all four schemes with default weights and the QAM
/// constellation free.
pub fn optimize_all(config: &SystemConfig) -> Result<[OptimizationResult; 4]> {
    Ok([
        optimize_tdd(config)?,
        optimize_analog(config)?,
        optimize_digital_errorfree(config)?,
        optimize_digital_qam(config)?,
    ])
}
