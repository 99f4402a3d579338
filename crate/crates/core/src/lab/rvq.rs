use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::channel::cn01;
use super::rng::{stream_rng, Purpose};
use crate::error::{domain, Result};

/// Largest codebook built explicitly (`2^20` codewords).
pub const MAX_RVQ_BITS: u32 = 20;

/// Above this many bits rate simulations draw the quantization error from
/// its exact distribution instead of searching a codebook.
pub(crate) const EXPLICIT_RATE_BITS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RvqResult {
    pub index: u64,
    pub codeword: DVector<Complex64>,
    /// `sin²` of the angle between the direction and the codeword.
    pub distortion: f64,
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| cn01(rng));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Nearest codeword in `|⟨c, d⟩|²` among the given codebook.
pub fn rvq_quantize_codebook(direction: &DVector<Complex64>, codebook: &[DVector<Complex64>]) -> Result<RvqResult> {
    let norm = direction.norm();
    if codebook.is_empty() || !(norm > 0.0) {
        return domain("quantization needs a non-zero direction and a non-empty codebook");
    }
    let (mut best, mut best_corr) = (0usize, -1.0);
    for (i, c) in codebook.iter().enumerate() {
        let corr = c.dotc(direction).norm_sqr();
        if corr > best_corr {
            best = i;
            best_corr = corr;
        }
    }
    let distortion = (1.0 - best_corr / (norm * norm)).max(0.0);
    Ok(RvqResult { index: best as u64, codeword: codebook[best].clone(), distortion })
}

/// Quantizes with a fresh codebook of `2^bits` isotropic unit vectors.
pub fn rvq_quantize_with<R: Rng + ?Sized>(direction: &DVector<Complex64>, bits: u32, rng: &mut R) -> Result<RvqResult> {
    if bits > MAX_RVQ_BITS {
        return domain(format!("explicit codebooks support at most {MAX_RVQ_BITS} bits, got {bits}"));
    }
    let n = direction.len();
    let norm = direction.norm();
    if n == 0 || !(norm > 0.0) {
        return domain("quantization needs a non-zero direction");
    }
    let (mut best, mut best_corr, mut best_word) = (0u64, -1.0, DVector::zeros(n));
    for i in 0..(1u64 << bits) {
        let c = random_unit(n, rng);
        let corr = c.dotc(direction).norm_sqr();
        if corr > best_corr {
            best = i;
            best_corr = corr;
            best_word = c;
        }
    }
    Ok(RvqResult { index: best, codeword: best_word, distortion: (1.0 - best_corr / (norm * norm)).max(0.0) })
}

pub fn rvq_quantize(direction: &DVector<Complex64>, bits: u32, seed: u64) -> Result<RvqResult> {
    rvq_quantize_with(direction, bits, &mut stream_rng(seed, Purpose::Quantizer, 0))
}

/// Draws the RVQ distortion `Z` with `P(Z > z) = (1 − z^{N_t−1})^{2^B}`,
/// real `B` allowed.
pub fn rvq_distortion_sample<R: Rng + ?Sized>(n_tx: usize, bits: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    // (1 − z^{n−1})^N = u  ⇒  z = (1 − u^{1/N})^{1/(n−1)}
    let inner = -(u.ln() * (-bits * std::f64::consts::LN_2).exp()).exp_m1();
    inner.powf(1.0 / (n_tx as f64 - 1.0))
}

/// Quantized unit direction with the RVQ error statistics: the codeword is
/// `sqrt(1−Z)·d + sqrt(Z)·u` with `u` isotropic in the complement of `d`.
pub(crate) fn rvq_statistical<R: Rng + ?Sized>(direction: &DVector<Complex64>, bits: f64, rng: &mut R) -> DVector<Complex64> {
    let n = direction.len();
    let d = direction / Complex64::new(direction.norm(), 0.0);
    let z = rvq_distortion_sample(n, bits, rng);
    let g = DVector::from_fn(n, |_, _| cn01(rng));
    let perp = &g - &d * d.dotc(&g);
    let u = &perp / Complex64::new(perp.norm(), 0.0);
    d * Complex64::new((1.0 - z).sqrt(), 0.0) + u * Complex64::new(z.sqrt(), 0.0)
}

/// Quantized direction for `bits` of feedback, using an explicit codebook
/// when it is small and integral.
pub(crate) fn quantize_for_rate<R: Rng + ?Sized>(direction: &DVector<Complex64>, bits: f64, rng: &mut R) -> DVector<Complex64> {
    if bits <= EXPLICIT_RATE_BITS && bits.fract() == 0.0 {
        match rvq_quantize_with(direction, bits as u32, rng) {
            Ok(r) => r.codeword,
            Err(_) => rvq_statistical(direction, bits, rng),
        }
    } else {
        rvq_statistical(direction, bits, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codebook_containing_direction_has_zero_distortion() {
        let mut rng = stream_rng(1, Purpose::Quantizer, 0);
        let d = random_unit(4, &mut rng);
        let book = vec![random_unit(4, &mut rng), d.clone() * Complex64::new(0.0, 1.0), random_unit(4, &mut rng)];
        let r = rvq_quantize_codebook(&d, &book).unwrap();
        assert_eq!(r.index, 1);
        assert!(r.distortion < 1e-14);
    }

    #[test]
    fn oversized_codebook_rejected() {
        let d = DVector::from_element(4, Complex64::new(0.5, 0.0));
        assert!(rvq_quantize(&d, 21, 0).is_err());
    }

    #[test]
    fn statistical_codeword_has_requested_distortion() {
        let mut rng = stream_rng(3, Purpose::Quantizer, 0);
        let d = random_unit(4, &mut rng);
        let q = rvq_statistical(&d, 8.0, &mut rng);
        assert!((q.norm() - 1.0).abs() < 1e-12);
        let s = 1.0 - q.dotc(&d).norm_sqr();
        assert!((0.0..1.0).contains(&s));
    }
}
