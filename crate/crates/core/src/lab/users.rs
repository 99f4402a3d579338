use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::channel::ChannelBatch;
use super::rate::McEstimate;
use super::selection::greedy_user_selection;
use super::{block_moments, mean_stderr};
use crate::error::{domain, Error, Result};
use crate::model::{feedback_error_prob, qam_symbol_error, FeedbackScheme, SchemeKind, SystemConfig};
use crate::tradeoff::{feedback_loss_users, max_feedback_len, optimize_training, DownlinkRate, LinkRates};

/// Perfect-CSIT ZF rate with greedy selection among `k` users, per served
/// beam: `E[sum rate]/N_t`. Block `b` uses the first `k` users of the same
/// channel draw for every `k`, so estimates for different `k` share noise.
pub fn rzf_users(n_tx: usize, snr: f64, k: usize, blocks: usize, seed: u64) -> Result<McEstimate> {
    if k == 0 || n_tx < 2 || !(snr > 0.0) || blocks < 2 {
        return domain(format!("invalid user-selection run: n_tx={n_tx}, K={k}, snr={snr}, blocks={blocks}"));
    }
    let batch = ChannelBatch::new(k, n_tx, seed, blocks);
    let (s, s2, n) = block_moments(blocks, |b| greedy_user_selection(&batch.block(b), n_tx, snr).sum_rate / n_tx as f64);
    let (mean, stderr) = mean_stderr(s, s2, n);
    Ok(McEstimate { mean, stderr, blocks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RzfKey {
    pub n_tx: usize,
    /// Bit pattern of the linear SNR.
    pub snr_bits: u64,
    pub k: usize,
    pub blocks: usize,
    pub seed: u64,
}

impl RzfKey {
    pub fn new(n_tx: usize, snr: f64, k: usize, blocks: usize, seed: u64) -> Self {
        Self { n_tx, snr_bits: snr.to_bits(), k, blocks, seed }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: RzfKey,
    value: McEstimate,
}

/// Memo of `R_zf,K` estimates shared between sweeps, optionally backed by
/// a JSON file.
#[derive(Debug, Default)]
pub struct RzfCache {
    entries: RwLock<BTreeMap<RzfKey, McEstimate>>,
    path: Option<PathBuf>,
}

impl RzfCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads entries from `path` if it exists; [`RzfCache::save`] writes back there.
    pub fn with_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut map = BTreeMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            let list: Vec<CacheEntry> =
                serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            map.extend(list.into_iter().map(|e| (e.key, e.value)));
        }
        Ok(Self { entries: RwLock::new(map), path: Some(path) })
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &RzfKey) -> Option<McEstimate> {
        self.entries.read().expect("cache lock poisoned").get(key).copied()
    }

    pub fn get_or_compute(&self, key: RzfKey) -> Result<McEstimate> {
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let value = rzf_users(key.n_tx, f64::from_bits(key.snr_bits), key.k, key.blocks, key.seed)?;
        Ok(*self.entries.write().expect("cache lock poisoned").entry(key).or_insert(value))
    }

    /// Per-beam rates for every `k` in `ks`.
    pub fn table(&self, n_tx: usize, snr: f64, ks: &[usize], blocks: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
        ks.iter().map(|&k| Ok((k, self.get_or_compute(RzfKey::new(n_tx, snr, k, blocks, seed))?.mean))).collect()
    }

    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let list: Vec<CacheEntry> = self
            .entries
            .read()
            .expect("cache lock poisoned")
            .iter()
            .map(|(k, v)| CacheEntry { key: *k, value: *v })
            .collect();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(&list).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Downlink rate when `k` users share the feedback symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsersRate {
    pub k: usize,
    pub t_fb: f64,
    /// Per-beam rate with training optimized.
    pub per_user: DownlinkRate,
    /// `N_t` times the per-beam rate at the integer training length.
    pub sum_rate: f64,
}

/// `max_T_tr (1 − T_tr/T)(R_zf,K − ln(1 + (N_t−1)/T_tr + Δ_K(T_fb)))`
/// with error-free digital feedback.
pub fn w_of_tfb_users(config: &SystemConfig, t_fb: f64, k: usize, r_zf_k: f64) -> Result<UsersRate> {
    w_of_tfb_users_scheme(config, &FeedbackScheme::digital(config.n_tx), t_fb, k, r_zf_k)
}

/// As [`w_of_tfb_users`] for any feedback scheme. Each of the `k` QAM
/// messages spans `T_fb/K` symbols.
pub fn w_of_tfb_users_scheme(
    config: &SystemConfig,
    scheme: &FeedbackScheme,
    t_fb: f64,
    k: usize,
    r_zf_k: f64,
) -> Result<UsersRate> {
    config.validate()?;
    if k == 0 {
        return domain("user count must be positive");
    }
    let loss = feedback_loss_users(scheme, t_fb, config.n_tx, k, config.snr)?;
    let mut per_user = optimize_training(r_zf_k, loss, config.n_tx, config.block_len)?;
    if scheme.kind == SchemeKind::DigitalQam {
        let p_s = qam_symbol_error(scheme.qam_order_or_default(), config.snr)?;
        let survive = 1.0 - feedback_error_prob(p_s, t_fb, k)?;
        per_user.rate *= survive;
        per_user.rate_int *= survive;
    }
    Ok(UsersRate { k, t_fb, per_user, sum_rate: config.n_tx as f64 * per_user.rate_int })
}

/// The user count maximizing the downlink rate at a feedback length.
pub fn best_users_for_tfb(
    config: &SystemConfig,
    scheme: &FeedbackScheme,
    t_fb: f64,
    rzf: &[(usize, f64)],
) -> Result<UsersRate> {
    let mut best: Option<UsersRate> = None;
    for &(k, r) in rzf {
        let cand = w_of_tfb_users_scheme(config, scheme, t_fb, k, r)?;
        if best.is_none_or(|b| cand.sum_rate > b.sum_rate) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty user-rate table".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsersOperatingPoint {
    pub lambda: f64,
    pub k: usize,
    pub t_fb: f64,
    pub t_tr: f64,
    pub r_down_bps: f64,
    pub r_up_bps: f64,
    /// Fraction of the uplink channel uses spent on feedback.
    pub uplink_spend: f64,
}

/// Joint search over `(K, T_fb)` of `λR_down + (1−λ)R_up` with integer
/// feedback lengths.
pub fn pareto_with_users(
    config: &SystemConfig,
    scheme: &FeedbackScheme,
    lambda: f64,
    rzf: &[(usize, f64)],
) -> Result<UsersOperatingPoint> {
    if !(0.0..=1.0).contains(&lambda) {
        return domain(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    let links = LinkRates::coherence(config);
    let up_uses = config.uplink_bw * config.coherence_time;
    let t_max = max_feedback_len(config, config.coherence_time).floor() as usize;
    let mut best: Option<(f64, UsersOperatingPoint)> = None;
    for t in 0..=t_max {
        let t_fb = t as f64;
        for &(k, r) in rzf {
            let w = w_of_tfb_users_scheme(config, scheme, t_fb, k, r)?;
            let down = links.down_bps(w.per_user.rate_int);
            let up = links.up_bps(t_fb);
            let score = lambda * down + (1.0 - lambda) * up;
            if best.as_ref().is_none_or(|b| score > b.0) {
                let point = UsersOperatingPoint {
                    lambda,
                    k,
                    t_fb,
                    t_tr: w.per_user.t_tr_int,
                    r_down_bps: down,
                    r_up_bps: up,
                    uplink_spend: t_fb / up_uses,
                };
                best = Some((score, point));
            }
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::InvalidConfig("empty user-rate table".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_reuses_entries() {
        let cache = RzfCache::new();
        let key = RzfKey::new(4, 10.0, 6, 200, 1);
        let a = cache.get_or_compute(key).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get_or_compute(key).unwrap(), a);
    }

    #[test]
    fn cache_round_trips_through_file() {
        let dir = std::env::temp_dir().join(format!("rzf-cache-{}", std::process::id()));
        let path = dir.join("cache.json");
        let cache = RzfCache::with_file(&path).unwrap();
        let key = RzfKey::new(4, 10.0, 5, 100, 2);
        let v = cache.get_or_compute(key).unwrap();
        cache.save().unwrap();
        let again = RzfCache::with_file(&path).unwrap();
        assert_eq!(again.get(&key), Some(v));
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn more_users_never_lose_with_perfect_feedback() {
        let cfg = SystemConfig::default();
        let low = w_of_tfb_users(&cfg, 200.0, 4, 1.0).unwrap();
        let high = w_of_tfb_users(&cfg, 200.0, 4, 1.2).unwrap();
        assert!(high.sum_rate > low.sum_rate);
    }
}
