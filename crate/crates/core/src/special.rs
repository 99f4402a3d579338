//! Special functions used by the closed-form rate expressions.

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below `x = 1`, modified Lentz continued fraction above.
/// Both branches converge to machine precision.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        return domain(format!("E1 requires x > 0, got {x}"));
    }
    if x <= 1.0 {
        // -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let k = k as f64;
            term *= -x / k;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        Ok(e1_continued_fraction(x) * (-x).exp())
    }
}

/// `e^x E1(x)` evaluated without overflow for large `x`.
pub fn scaled_e1(x: f64) -> Result<f64> {
    if x > 1.0 {
        if !x.is_finite() {
            return Ok(0.0);
        }
        Ok(e1_continued_fraction(x))
    } else {
        Ok(x.exp() * exp_integral_e1(x)?)
    }
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
