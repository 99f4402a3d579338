//! Monte Carlo engine: Rayleigh channels, pilot-based MMSE estimation,
//! analog and quantized feedback, zero-forcing beams, greedy user selection
//! and the resulting ergodic rates.
//!
//! Channel matrices store row `k` as `h_k^H`, so the received samples of a
//! transmitted vector `x` are `H x`.

mod beam;
mod channel;
mod rate;
mod rng;
mod rvq;
mod selection;
mod summary;
mod users;

pub use beam::{zf_beamformers, zf_beamformers_checked};
pub use channel::{mmse_estimate, mmse_estimate_with, mmse_error_variance, ChannelBatch};
pub use rate::{ergodic_rate_mc, lower_bound_for, CsitSource, McEstimate};
pub use rng::{stream_rng, Purpose};
pub use rvq::{rvq_distortion_sample, rvq_quantize, rvq_quantize_codebook, rvq_quantize_with, RvqResult, MAX_RVQ_BITS};
pub use selection::{greedy_user_selection, SelectionOutcome};
pub use summary::{config_hash, McSummary};
pub use users::{
    best_users_for_tfb, pareto_with_users, rzf_users, w_of_tfb_users, w_of_tfb_users_scheme, RzfCache, RzfKey,
    UsersOperatingPoint, UsersRate,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex matrix with one row per user.
pub type CMatrix = DMatrix<Complex64>;

/// Blocks per reduction chunk. Chunk sums are combined in index order so
/// results do not depend on thread count.
pub(crate) const CHUNK: usize = 512;

/// `(Σx, Σx², n)` over blocks `0..n`, deterministic in the reduction order.
pub(crate) fn block_moments<F>(n: usize, f: F) -> (f64, f64, usize)
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let chunk_sum = |c: usize| {
        let (mut s, mut s2) = (0.0, 0.0);
        for b in c * CHUNK..((c + 1) * CHUNK).min(n) {
            let v = f(b as u64);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = (0..chunks).map(chunk_sum).collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    (s, s2, n)
}

/// Mean and standard error from block moments.
pub(crate) fn mean_stderr(s: f64, s2: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0).max(1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}
