//! zCDP to `(ε, δ)`-DP conversion and its inverse.

use crate::error::{Error, Result};

/// Upper end of the Rényi order search.
pub const MAX_ORDER: f64 = 500.0;
const MIN_ORDER: f64 = 1.0 + 1e-9;
const ORDER_TOL: f64 = 1e-10;

/// `ln δ(α)` for the conversion bound at Rényi order `alpha > 1`.
pub fn log_delta_at_order(rho: f64, epsilon: f64, alpha: f64) -> f64 {
    (alpha - 1.0) * (alpha * rho - epsilon) - (alpha - 1.0).ln() + alpha * (-1.0 / alpha).ln_1p()
}

/// Smallest `δ` such that `ρ`-zCDP implies `(ε, δ)`-DP, minimizing over the
/// Rényi order `α ∈ (1, 500]` by golden-section search. The objective is
/// convex in `α`. Clamped to `[0, 1]`.
pub fn zcdp_to_delta(rho: f64, epsilon: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let f = |a: f64| log_delta_at_order(rho, epsilon, a);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (MIN_ORDER, MAX_ORDER);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > ORDER_TOL {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let best = f(0.5 * (lo + hi)).min(fc).min(fd).min(f(MAX_ORDER));
    best.exp().clamp(0.0, 1.0)
}

/// Largest `ρ` whose conversion at `epsilon` yields at most `delta`, found by
/// bisection to relative tolerance `1e-9`.
pub fn calibrate_rho(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need epsilon > 0 and 0 < delta < 1, got ({epsilon}, {delta})"
        )));
    }
    bisect_rho(|rho| zcdp_to_delta(rho, epsilon), delta)
}

/// Bisection for the largest `ρ` with `delta_of(ρ) <= delta`, assuming
/// `delta_of` is nondecreasing in `ρ`.
pub(crate) fn bisect_rho(delta_of: impl Fn(f64) -> f64, delta: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while delta_of(hi) <= delta {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Solver("rho calibration diverged".into()));
        }
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if delta_of(mid) <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
