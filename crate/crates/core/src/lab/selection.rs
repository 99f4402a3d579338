use serde::{Deserialize, Serialize};

use super::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Selected user indices in the order they were added.
    pub chosen: Vec<usize>,
    /// Sum rate of the selected users (nats per channel use).
    pub sum_rate: f64,
    pub per_user: Vec<f64>,
}

/// ZF rates `ln(1 + (ρ/|S|)/[(H_S H_S^H)^{-1}]_{ii})` of the users in `set`,
/// reading the Gram entries from `gram`. `None` when the set is singular.
fn zf_set_rates(gram: &CMatrix, set: &[usize], snr: f64) -> Option<Vec<f64>> {
    let s = set.len();
    let sub = CMatrix::from_fn(s, s, |i, j| gram[(set[i], set[j])]);
    let trace_max = (0..s).map(|i| sub[(i, i)].re).fold(0.0, f64::max);
    let chol = sub.cholesky()?;
    let l = chol.l_dirty();
    if (0..s).any(|i| l[(i, i)].re.powi(2) <= 1e-12 * trace_max) {
        return None;
    }
    let inv = chol.inverse();
    let p = snr / s as f64;
    Some((0..s).map(|i| (p / inv[(i, i)].re).ln_1p()).collect())
}

/// Greedy sum-rate selection with equal-power ZF: users are added one at a
/// time, each time the one giving the largest sum rate, until no addition
/// improves the sum rate or `N_t` users are served.
pub fn greedy_user_selection(channels: &CMatrix, n_tx: usize, snr: f64) -> SelectionOutcome {
    let k_total = channels.nrows();
    let gram = channels * channels.adjoint();
    let mut chosen: Vec<usize> = Vec::with_capacity(n_tx);
    let mut per_user: Vec<f64> = Vec::new();
    let mut sum_rate = 0.0;
    while chosen.len() < n_tx.min(k_total) {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        let mut trial = chosen.clone();
        trial.push(0);
        for cand in (0..k_total).filter(|c| !chosen.contains(c)) {
            *trial.last_mut().unwrap() = cand;
            if let Some(rates) = zf_set_rates(&gram, &trial, snr) {
                let total: f64 = rates.iter().sum();
                if best.as_ref().is_none_or(|b| total > b.1) {
                    best = Some((cand, total, rates));
                }
            }
        }
        match best {
            Some((cand, total, rates)) if total > sum_rate => {
                chosen.push(cand);
                sum_rate = total;
                per_user = rates;
            }
            _ => break,
        }
    }
    SelectionOutcome { chosen, sum_rate, per_user }
}
