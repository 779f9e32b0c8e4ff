//! The jamming-averaged Gaussian-energy integral Φ and the KL quantities built on it.
//!
//! `Φ(x, z) = ∫₀^∞ e^{−v} (1 + x v)^{−n} e^{−z/(1 + x v)} dv`.
//!
//! For large `n` or `z` the integrand is a narrow spike well away from the origin,
//! which a fixed Laguerre rule cannot resolve. Substituting `u = ln(1 + x v)` gives a
//! log-integrand that is strictly concave, so the spike location is known in closed
//! form and adaptive quadrature runs on a window around it.

use std::collections::HashMap;
use std::sync::Mutex;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, CovertError, Result};
use crate::numerics::{integrate_pieces, relative_gap, Quadrature, QuadratureRule};

/// Log-integrand drop that defines the integration window around the peak.
const WINDOW_DROP: f64 = 50.0;
/// Laguerre and adaptive results must agree to this relative level.
const AGREEMENT: f64 = 1e-8;

struct LogIntegrand {
    x: f64,
    z: f64,
    m: f64,
    ln_x: f64,
}

impl LogIntegrand {
    fn new(x: f64, z: f64, n: usize) -> Self {
        LogIntegrand { x, z, m: n as f64 - 1.0, ln_x: x.ln() }
    }

    fn eval(&self, u: f64) -> f64 {
        -u.exp_m1() / self.x - self.m * u - self.z * (-u).exp() - self.ln_x
    }

    /// Maximizer over `u ≥ 0`, from the quadratic in `e^u` that zeroes the derivative.
    fn peak(&self) -> f64 {
        if self.z == 0.0 {
            return 0.0;
        }
        let w = 2.0 * self.z / (self.m + (self.m * self.m + 4.0 * self.z / self.x).sqrt());
        w.ln().max(0.0)
    }

    fn curvature(&self, u: f64) -> f64 {
        u.exp() / self.x + self.z * (-u).exp()
    }

    /// Finds the point at which the log-integrand has fallen `WINDOW_DROP` below the peak,
    /// walking from `peak` in direction `dir` but never past `limit`.
    fn window_edge(&self, peak: f64, top: f64, step0: f64, dir: f64, limit: f64) -> f64 {
        let target = top - WINDOW_DROP;
        let clamp = |u: f64| if dir > 0.0 { u.min(limit) } else { u.max(limit) };
        let mut inner = peak;
        let mut step = step0;
        let mut outer = clamp(peak + dir * step);
        while self.eval(outer) > target {
            if outer == limit {
                return limit;
            }
            inner = outer;
            step *= 2.0;
            outer = clamp(peak + dir * step);
        }
        for _ in 0..12 {
            let mid = 0.5 * (inner + outer);
            if self.eval(mid) > target {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        outer
    }
}

fn check_phi_args(x: f64, z: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(CovertError::InvalidConfig("sample count must be at least 1".into()));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain("phi", x, "x >= 0"));
    }
    if !(z >= 0.0 && z.is_finite()) {
        return Err(domain("phi", z, "z >= 0"));
    }
    Ok(())
}

/// `ln Φ(x, z)` for `n` observed symbols.
pub fn ln_phi(x: f64, z: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    check_phi_args(x, z, n)?;
    if x == 0.0 {
        return Ok(-z);
    }
    let g = LogIntegrand::new(x, z, n);
    let peak = g.peak();
    let width_u = 1.0 / g.curvature(peak).sqrt();
    let width_v = width_u * peak.exp() / x;
    // Only try the fixed rule when the spike spans several Laguerre node gaps.
    if width_v * (quad.order() as f64).sqrt() > 4.0 {
        let nf = n as f64;
        let log_integrand = |v: f64| -nf * (x * v).ln_1p() - z / (1.0 + x * v);
        let fine = quad.rule(0.0).log_integrate_exp(log_integrand);
        let coarse = quad.coarse_rule(0.0).log_integrate_exp(log_integrand);
        if fine.is_finite() && (fine - coarse).abs() <= AGREEMENT {
            return Ok(fine);
        }
    }
    ln_phi_adaptive(&g, peak, width_u)
}

fn ln_phi_adaptive(g: &LogIntegrand, peak: f64, width_u: f64) -> Result<f64> {
    let top = g.eval(peak);
    let hi = g.window_edge(peak, top, width_u, 1.0, f64::INFINITY);
    let lo = if peak > 0.0 { g.window_edge(peak, top, width_u, -1.0, 0.0) } else { 0.0 };
    let breaks: Vec<f64> = if lo < peak && peak < hi { vec![lo, peak, hi] } else { vec![lo, hi] };
    let integral = integrate_pieces(|u| (g.eval(u) - top).exp(), &breaks, 0.0, 1e-12, 400)?;
    let out = top + integral.value.ln();
    if out.is_finite() {
        Ok(out)
    } else {
        Err(CovertError::NonFinite { op: "ln_phi" })
    }
}

/// `Φ(x, z)`; underflows to zero where `ln_phi` stays finite.
pub fn phi(x: f64, z: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    ln_phi(x, z, n, quad).map(f64::exp)
}

/// `Ψ − 1 = p/(q−p)·(1 − Φ(p,z)/Φ(q,z))`, the per-band likelihood ratio minus one.
fn psi_minus_one(p: f64, q: f64, z: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    if p == 0.0 {
        return Ok(0.0);
    }
    let ratio_ln = ln_phi(p, z, n, quad)? - ln_phi(q, z, n, quad)?;
    Ok(-p / (q - p) * ratio_ln.exp_m1())
}

/// Log-likelihood ratio (signal versus no signal) of one band-block at normalized energy `z`.
pub fn ln_psi(p: f64, q: f64, z: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    check_pq("ln_psi", p, q)?;
    Ok(psi_minus_one(p, q, z, n, quad)?.ln_1p())
}

fn check_pq(op: &'static str, p: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain(op, q, "q > 0"));
    }
    if !(p >= 0.0 && p < q) {
        return Err(domain(op, p, "0 <= p < q"));
    }
    Ok(())
}

/// `w − ln(1 + w)`, accurate for small `w`.
fn excess_over_log1p(w: f64) -> f64 {
    if w.abs() < 1e-3 {
        // w²/2 − w³/3 + w⁴/4 − w⁵/5
        let w2 = w * w;
        w2 * (0.5 - w / 3.0 + w2 / 4.0 - w2 * w / 5.0)
    } else {
        w - w.ln_1p()
    }
}

/// Range of `ln z` covering the observed-energy law under no signal.
fn energy_log_range(q: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let z_lo = ((ln_gamma(nf + 1.0) - 46.0) / nf).exp();
    let z_hi = (nf + 12.0 * nf.sqrt() + 40.0) * (1.0 + 45.0 * q);
    (z_lo.ln(), z_hi.ln())
}

/// Integrates `h(z)` against the no-signal energy density with `n` symbols, using the
/// Laguerre rule when the configured and coarse orders agree, else adaptive quadrature in `ln z`.
fn expect_under_no_signal<H>(q: f64, n: usize, quad: &Quadrature, op: &'static str, h: H) -> Result<f64>
where
    H: Fn(f64, f64) -> Result<f64>,
{
    // h receives (z, ln Φ(q, z)).
    let alpha = n as f64 - 1.0;
    let laguerre = |rule: &QuadratureRule| -> Result<f64> {
        let mut acc = 0.0;
        for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
            let lp = ln_phi(q, z, n, quad)?;
            acc += w * (lp + z).exp() * h(z, lp)?;
        }
        Ok(acc)
    };
    let fine = laguerre(&quad.rule(alpha))?;
    let coarse = laguerre(&quad.coarse_rule(alpha))?;
    if fine.is_finite() && relative_gap(fine, coarse) <= AGREEMENT {
        return Ok(fine);
    }
    log::debug!("{op}: Laguerre orders disagree ({fine:e} vs {coarse:e}); using adaptive quadrature");
    let (s_lo, s_hi) = energy_log_range(q, n);
    let nf = n as f64;
    let ln_norm = ln_gamma(nf);
    let mut failure = None;
    let integrand = |s: f64| {
        let z = s.exp();
        let value = ln_phi(q, z, n, quad).and_then(|lp| Ok((nf * s + lp - ln_norm).exp() * h(z, lp)?));
        match value {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mid = nf.ln().clamp(s_lo, s_hi);
    let integral = integrate_pieces(integrand, &[s_lo, mid, s_hi], 0.0, 1e-10, 4000);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral?.value)
}

/// `D(f₀ ‖ f₁)` between the no-signal and signal energy laws of one band with `n` symbols.
///
/// Evaluated as `E₀[w − ln(1 + w)]` with `w = Ψ − 1`; since `E₀[w] = 0` this equals
/// `−E₀[ln Ψ]` but has a nonnegative integrand without first-order cancellation.
pub fn kl_divergence(p: f64, q: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    check_pq("kl_divergence", p, q)?;
    if n == 0 {
        return Err(CovertError::InvalidConfig("sample count must be at least 1".into()));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let c = p / (q - p);
    expect_under_no_signal(q, n, quad, "kl_divergence", |z, lnphi_q| {
        let w = -c * (ln_phi(p, z, n, quad)? - lnphi_q).exp_m1();
        Ok(excess_over_log1p(w))
    })
}

/// Curvature coefficient of the KL divergence in the signal power at zero:
/// `D(p, q, n) ≈ ζ(q, n)·p²/(2q²)`.
pub fn zeta(q: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain("zeta", q, "q > 0"));
    }
    if n == 0 {
        return Err(CovertError::InvalidConfig("sample count must be at least 1".into()));
    }
    let alpha = n as f64 - 1.0;
    let laguerre = |rule: &QuadratureRule| -> Result<f64> {
        let mut acc = 0.0;
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * (-y - ln_phi(q, y, n, quad)?).exp();
        }
        Ok(acc)
    };
    let fine = laguerre(&quad.rule(alpha))?;
    let coarse = laguerre(&quad.coarse_rule(alpha))?;
    let total = if fine.is_finite() && relative_gap(fine, coarse) <= AGREEMENT {
        fine
    } else {
        log::debug!("zeta: Laguerre orders disagree ({fine:e} vs {coarse:e}); using adaptive quadrature");
        zeta_adaptive(q, n, quad)?
    };
    Ok(total - 1.0)
}

/// `E_{y∼Gamma(n,1)}[e^{−y}/Φ(q,y)]` by adaptive quadrature in `s = ln y`.
pub(crate) fn zeta_adaptive(q: f64, n: usize, quad: &Quadrature) -> Result<f64> {
    let (s_lo, s_hi) = energy_log_range(q, n);
    let nf = n as f64;
    let ln_norm = ln_gamma(nf);
    let mut failure = None;
    let integrand = |s: f64| {
        let y = s.exp();
        match ln_phi(q, y, n, quad) {
            Ok(lp) => (nf * s - 2.0 * y - lp - ln_norm).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mid = nf.ln().clamp(s_lo, s_hi);
    let integral = integrate_pieces(integrand, &[s_lo, mid, s_hi], 0.0, 1e-11, 4000);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral?.value)
}

/// Memo of `ζ(q, n)` keyed by the exact bits of `q` and the symbol count.
#[derive(Debug, Default)]
pub struct ZetaCache {
    values: Mutex<HashMap<(u64, usize), f64>>,
}

impl ZetaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, q: f64, n: usize, quad: &Quadrature) -> Result<f64> {
        let key = (q.to_bits(), n);
        if let Some(&v) = self.values.lock().expect("zeta cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = zeta(q, n, quad)?;
        self.values.lock().expect("zeta cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.values.lock().expect("zeta cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Adaptive-only `ln Φ`, exposed for cross-checks against the Laguerre path.
pub fn ln_phi_reference(x: f64, z: f64, n: usize) -> Result<f64> {
    check_phi_args(x, z, n)?;
    if x == 0.0 {
        return Ok(-z);
    }
    let g = LogIntegrand::new(x, z, n);
    let peak = g.peak();
    let width_u = 1.0 / g.curvature(peak).sqrt();
    ln_phi_adaptive(&g, peak, width_u)
}
