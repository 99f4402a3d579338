use super::CMatrix;
use crate::error::{Error, Result};

/// Relative pivot size below which the Gram matrix counts as singular.
const RANK_TOL: f64 = 1e-12;

/// Zero-forcing beams: columns of `Ĥ^H (Ĥ Ĥ^H)^{-1}` scaled to unit norm.
/// Column `k` is orthogonal to every row `j ≠ k` of `Ĥ`.
pub fn zf_beamformers(estimate: &CMatrix) -> Result<CMatrix> {
    let hh = estimate.adjoint();
    let gram = estimate * &hh;
    let scale = (0..gram.nrows()).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| l[(i, i)].re.powi(2) <= RANK_TOL * scale) {
        return Err(Error::RankDeficient);
    }
    let inv = chol.inverse();
    let mut v = hh * inv;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::RankDeficient);
        }
        col /= nalgebra::Complex::new(norm, 0.0);
    }
    Ok(v)
}

/// As [`zf_beamformers`], but also rejects beams whose leakage onto other
/// users exceeds `tol`.
pub fn zf_beamformers_checked(estimate: &CMatrix, tol: f64) -> Result<CMatrix> {
    let v = zf_beamformers(estimate)?;
    let cross = estimate * &v;
    for j in 0..cross.nrows() {
        for k in 0..cross.ncols() {
            if j != k && cross[(j, k)].norm() > tol {
                return Err(Error::RankDeficient);
            }
        }
    }
    Ok(v)
}
