//! Bracketing root finders.

use crate::error::{CovertError, Result};

/// Bisection on `[lo, hi]` for a function whose sign differs at the two ends.
///
/// Stops when the bracket width falls below `xtol` (absolute) or after
/// `max_iter` halvings, returning the midpoint of the final bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(CovertError::Bracket { op: "bisect", detail: format!("f({lo}) = {f_lo}, f({hi}) = {f_hi}") });
    }
    let lo_positive = f_lo > 0.0;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection in log-space for a positive variable; useful when the root may
/// span many decades (Lagrange multipliers, curvature-scaled steps).
pub fn bisect_log<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > lo);
    let root = bisect(|s| f(s.exp()), lo.ln(), hi.ln(), rel_tol, max_iter)?;
    Ok(root.exp())
}

/// Doubles `hi` (starting from `hi0 > lo`) until `f(hi)` has the opposite sign
/// of `f(lo)`. Returns the expanded upper end.
pub fn expand_upper<F>(mut f: F, lo: f64, hi0: f64, cap: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let sign_lo = f(lo).signum();
    let mut hi = hi0;
    while hi <= cap {
        let v = f(hi);
        if v == 0.0 || v.signum() != sign_lo {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(CovertError::Bracket { op: "expand_upper", detail: format!("no sign change in [{lo}, {cap}]") })
}
