//! One-dimensional search helpers for concave objectives.

/// Outcome of a one-dimensional search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Maximizes a concave `f` on `[lo, hi]` by bisection on its derivative.
///
/// `df` must be non-increasing. When the derivative does not change sign
/// the corresponding endpoint is returned.
pub fn maximize_by_derivative<F, D>(f: F, df: D, lo: f64, hi: f64, tol: f64) -> SearchResult
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if df(lo) <= 0.0 {
        return SearchResult { x: lo, value: f(lo), iterations: 0 };
    }
    if df(hi) >= 0.0 {
        return SearchResult { x: hi, value: f(hi), iterations: 0 };
    }
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        let mid = 0.5 * (a + b);
        if df(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    SearchResult { x, value: f(x), iterations }
}

/// Root of a monotone function on `[lo, hi]` by bisection. The bracket
/// must contain a sign change.
pub fn bisect_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Option<(f64, usize)>
where
    F: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some((lo, 0));
    }
    if fhi == 0.0 {
        return Some((hi, 0));
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let increasing = fhi > flo;
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while (b - a) > tol * (1.0 + a.abs()) && iterations < 300 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if (fm < 0.0) == increasing {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Some((0.5 * (a + b), iterations))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> SearchResult
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while (b - a) > tol && iterations < 300 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    // the bracket endpoints are candidates too when the maximum sits on a bound
    let mut best = SearchResult { x: 0.5 * (a + b), value: f(0.5 * (a + b)), iterations };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = SearchResult { x, value: v, iterations };
        }
    }
    best
}

/// Best of `floor(x)` and `ceil(x)` within `[lo, hi]` under `f`.
pub fn best_integer_neighbor<F>(f: F, x: f64, lo: f64, hi: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for cand in [x.floor(), x.ceil()] {
        let cand = cand.clamp(lo.ceil(), hi.floor());
        let v = f(cand);
        if v > best.1 {
            best = (cand, v);
        }
    }
    best
}
