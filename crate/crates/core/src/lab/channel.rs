use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::{stream_rng, Purpose};
use super::CMatrix;
use crate::error::{domain, Result};

/// Draws one circularly symmetric `CN(0, 1)` sample.
pub(crate) fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `K × N_t` Rayleigh channels, one matrix per block, regenerated on demand
/// from the seed. Users are drawn row by row, so the first `K'` rows of a
/// block do not depend on `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelBatch {
    pub n_users: usize,
    pub n_tx: usize,
    pub seed: u64,
    pub count: usize,
}

impl ChannelBatch {
    pub fn new(n_users: usize, n_tx: usize, seed: u64, count: usize) -> Self {
        Self { n_users, n_tx, seed, count }
    }

    pub fn block(&self, index: u64) -> CMatrix {
        let mut rng = stream_rng(self.seed, Purpose::Channel, index);
        let mut h = CMatrix::zeros(self.n_users, self.n_tx);
        for k in 0..self.n_users {
            for i in 0..self.n_tx {
                h[(k, i)] = cn01(&mut rng);
            }
        }
        h
    }

    /// All blocks materialized.
    pub fn realizations(&self) -> Vec<CMatrix> {
        (0..self.count as u64).map(|b| self.block(b)).collect()
    }
}

/// Estimation error variance `1/(1 + T_tr ρ / N_t)`.
pub fn mmse_error_variance(t_tr: f64, snr: f64, n_tx: usize) -> f64 {
    1.0 / (1.0 + t_tr * snr / n_tx as f64)
}

/// Pilot observation `s = a h + z` with `a = sqrt(T_tr ρ/N_t)` followed by
/// the per-coefficient linear MMSE `a/(1 + a²) s`.
pub fn mmse_estimate_with<R: Rng + ?Sized>(
    channel: &CMatrix,
    t_tr: f64,
    snr: f64,
    n_tx: usize,
    rng: &mut R,
) -> Result<(CMatrix, f64)> {
    if !(t_tr >= n_tx as f64) {
        return domain(format!("training length {t_tr} below N_t = {n_tx}"));
    }
    let a = (t_tr * snr / n_tx as f64).sqrt();
    let w = a / (1.0 + a * a);
    let est = channel.map(|h| (h * a + cn01(rng)) * w);
    Ok((est, mmse_error_variance(t_tr, snr, n_tx)))
}

pub fn mmse_estimate(channel: &CMatrix, t_tr: f64, snr: f64, n_tx: usize, seed: u64) -> Result<(CMatrix, f64)> {
    mmse_estimate_with(channel, t_tr, snr, n_tx, &mut stream_rng(seed, Purpose::TrainingNoise, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_users_do_not_depend_on_count() {
        let a = ChannelBatch::new(4, 4, 11, 2).block(1);
        let b = ChannelBatch::new(9, 4, 11, 2).block(1);
        assert_eq!(a, b.rows(0, 4).into_owned());
    }

    #[test]
    fn error_variance_value() {
        assert!((mmse_error_variance(24.0, 10.0, 4) - 1.0 / 61.0).abs() < 1e-15);
        assert!(mmse_error_variance(4.0, 1e12, 4) < 1e-11);
    }

    #[test]
    fn short_training_rejected() {
        let h = ChannelBatch::new(4, 4, 1, 1).block(0);
        assert!(mmse_estimate(&h, 0.0, 10.0, 4, 1).is_err());
        assert!(mmse_estimate(&h, 3.0, 10.0, 4, 1).is_err());
    }
}
