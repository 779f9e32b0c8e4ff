//! Ergodic-sum-rate maximization over power ratios and the pilot fraction when
//! channels change every block and the transmitter estimates them from pilots.

use std::f64::consts::LN_2;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covertness::ZetaCache;
use crate::error::{domain, CovertError, Result};
use crate::numerics::{bisect, bisect_log, Quadrature};
use crate::scenario::{pilot_symbols, FastVaryingParams};

const LAMBDA_CAP: f64 = 1.152_921_504_606_847e18; // 2^60
const LAMBDA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FvMethod {
    Es,
    Ao,
}

impl FvMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FvMethod::Es => "es",
            FvMethod::Ao => "ao",
        }
    }
}

/// One AO round, or one pilot-grid candidate for exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FvTracePoint {
    pub iteration: usize,
    pub tau: f64,
    pub objective: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FvFlags {
    pub max_iter_reached: bool,
    /// Some band had a larger curvature coefficient on the data phase than on the whole block.
    pub zeta_order_violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvSolveResult {
    pub chi: Vec<f64>,
    pub tau: f64,
    pub pilots: usize,
    /// Ergodic sum rate in nats per symbol.
    pub objective: f64,
    pub lambda: f64,
    pub method: FvMethod,
    pub trace: Vec<FvTracePoint>,
    /// `Σ ζ_k(τ) χ_k²/2` at the returned point.
    pub kl_used: f64,
    pub flags: FvFlags,
}

impl FvSolveResult {
    pub fn objective_bits(&self) -> f64 {
        self.objective / LN_2
    }
}

/// `(1−τ) Σ ln(1 + SNR̄_k)` with the estimation-aware average SNR of each band.
pub fn ergodic_sum_rate(chis: &[f64], tau: f64, params: &FastVaryingParams) -> f64 {
    let mut total = 0.0;
    for (k, &chi) in chis.iter().enumerate() {
        if chi <= 0.0 {
            continue;
        }
        let signal = chi * tau * params.g[k];
        let disturbance = tau * chi * params.e[k] + chi * params.mu_tilde[k] + tau * params.f1[k] + params.f2[k];
        total += (signal / disturbance).ln_1p();
    }
    (1.0 - tau) * total
}

fn weighted_energy(chis: &[f64], zetas: &[f64]) -> f64 {
    chis.iter().zip(zetas).map(|(c, z)| 0.5 * z * c * c).sum()
}

/// Stationary power ratios for a fixed multiplier: each band's unique positive root of
/// `χ((G̃+Ẽ)χ + F̃)(Ẽχ + F̃) = (1−τ)G̃F̃/(λζ)`.
pub fn chi_at_multiplier(tau: f64, params: &FastVaryingParams, zetas: &[f64], lambda: f64) -> Vec<f64> {
    (0..params.len())
        .map(|k| {
            let g = tau * params.g[k];
            let e = tau * params.e[k] + params.mu_tilde[k];
            let f = tau * params.f1[k] + params.f2[k];
            let rhs = (1.0 - tau) * g * f / (lambda * zetas[k]);
            if !(rhs > 0.0) {
                return 0.0;
            }
            let lhs = |x: f64| x * ((g + e) * x + f) * (e * x + f);
            let mut hi = rhs / (f * f);
            if e > 0.0 {
                hi = hi.min((rhs / ((g + e) * e)).cbrt());
            }
            if !hi.is_finite() {
                hi = f64::MAX;
            }
            bisect(|x| lhs(x) - rhs, 0.0, hi, 0.0, 1100).unwrap_or(hi)
        })
        .collect()
}

/// Optimal power ratios at fixed `tau` under `Σ ζ_k χ_k²/2 ≤ budget`, with the multiplier.
pub fn chi_given_tau(tau: f64, params: &FastVaryingParams, zetas: &[f64], budget: f64) -> Result<(Vec<f64>, f64)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(domain("chi_given_tau", tau, "(0, 1)"));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(domain("chi_given_tau", budget, "budget > 0"));
    }
    if zetas.len() != params.len() {
        return Err(CovertError::InvalidConfig(format!(
            "{} curvature coefficients for {} bands",
            zetas.len(),
            params.len()
        )));
    }
    if let Some(&z) = zetas.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
        return Err(domain("chi_given_tau", z, "zeta > 0"));
    }
    let excess = |lambda: f64| weighted_energy(&chi_at_multiplier(tau, params, zetas, lambda), zetas) - budget;

    let mut lo = 1e-12;
    while excess(lo) <= 0.0 {
        lo *= 0.5;
        if lo < LAMBDA_FLOOR {
            return Err(CovertError::Bracket {
                op: "chi_given_tau",
                detail: "multiplier lower end underflowed".into(),
            });
        }
    }
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > LAMBDA_CAP {
            return Err(CovertError::Bracket { op: "chi_given_tau", detail: "multiplier exceeded 2^60".into() });
        }
    }
    if lo >= hi {
        lo = 0.5 * hi;
        while excess(lo) <= 0.0 {
            lo *= 0.5;
            if lo < LAMBDA_FLOOR {
                return Err(CovertError::Bracket { op: "chi_given_tau", detail: "empty multiplier bracket".into() });
            }
        }
    }
    let mut feasible = hi;
    bisect_log(
        |lambda| {
            let v = excess(lambda);
            if v <= 0.0 {
                feasible = feasible.min(lambda);
            }
            v
        },
        lo,
        hi,
        0.0,
        200,
    )?;
    Ok((chi_at_multiplier(tau, params, zetas, feasible), feasible))
}

/// Derivative in `τ` of the ergodic sum rate at fixed power ratios.
pub fn rate_slope_in_tau(chis: &[f64], tau: f64, params: &FastVaryingParams) -> f64 {
    let mut total = 0.0;
    for (k, &chi) in chis.iter().enumerate() {
        if chi <= 0.0 {
            continue;
        }
        let g = chi * params.g[k];
        let e = chi * params.e[k] + params.f1[k];
        let f = chi * params.mu_tilde[k] + params.f2[k];
        total += g * f * (1.0 - tau) / ((e * tau + f) * ((g + e) * tau + f)) - (g * tau / (e * tau + f)).ln_1p();
    }
    total
}

/// Rate-maximizing pilot fraction for fixed power ratios; the rate is concave in `τ`.
pub fn tau_given_chi(chis: &[f64], params: &FastVaryingParams) -> Result<f64> {
    if chis.len() != params.len() {
        return Err(CovertError::InvalidConfig(format!("{} power ratios for {} bands", chis.len(), params.len())));
    }
    if !chis.iter().any(|&c| c > 0.0) {
        return Err(CovertError::InvalidConfig("pilot fraction is undetermined at zero power".into()));
    }
    bisect(|t| rate_slope_in_tau(chis, t, params), 0.0, 1.0, 0.0, 200)
}

/// `ζ_k` at pilot fraction `tau` under the configured observation model.
pub fn zeta_values(params: &FastVaryingParams, tau: f64, quad: &Quadrature, cache: &ZetaCache) -> Result<Vec<f64>> {
    let n = params.observed_symbols(tau);
    params.q_norm.iter().map(|&q| cache.get(q, n, quad)).collect()
}

fn full_block_zetas(params: &FastVaryingParams, quad: &Quadrature, cache: &ZetaCache) -> Result<Vec<f64>> {
    params.q_norm.iter().map(|&q| cache.get(q, params.n, quad)).collect()
}

fn check_params(params: &FastVaryingParams) -> Result<()> {
    if params.n < 2 {
        return Err(CovertError::InvalidConfig(format!("block length must be at least 2, got {}", params.n)));
    }
    if params.is_empty() {
        return Err(CovertError::InvalidConfig("at least one band is required".into()));
    }
    Ok(())
}

/// Global optimum by solving every pilot count `1..N−1`.
pub fn es_solve(params: &FastVaryingParams, quad: &Quadrature, cache: &ZetaCache) -> Result<FvSolveResult> {
    check_params(params)?;
    let budget = params.kl_budget();
    let nf = params.n as f64;
    let candidates = (1..params.n)
        .into_par_iter()
        .map(|pilots| {
            let tau = pilots as f64 / nf;
            let zetas = zeta_values(params, tau, quad, cache)?;
            let (chi, lambda) = chi_given_tau(tau, params, &zetas, budget)?;
            let objective = ergodic_sum_rate(&chi, tau, params);
            Ok((pilots, chi, lambda, objective, zetas))
        })
        .collect::<Result<Vec<_>>>()?;

    let trace = candidates
        .iter()
        .map(|(pilots, _, lambda, objective, _)| FvTracePoint {
            iteration: *pilots,
            tau: *pilots as f64 / nf,
            objective: *objective,
            lambda: *lambda,
        })
        .collect();
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.3 > candidates[best].3 {
            best = i;
        }
    }
    let (pilots, chi, lambda, objective, zetas) = candidates.into_iter().nth(best).expect("nonempty grid");
    Ok(FvSolveResult {
        kl_used: weighted_energy(&chi, &zetas),
        chi,
        tau: pilots as f64 / nf,
        pilots,
        objective,
        lambda,
        method: FvMethod::Es,
        trace,
        flags: FvFlags::default(),
    })
}

/// Nearest grid pilot count for a real fraction, ties toward more pilots, kept in `1..N−1`.
pub fn round_to_grid(tau: f64, n: usize) -> usize {
    let raw = (tau * n as f64 + 0.5).floor();
    (raw.max(1.0) as usize).min(n - 1)
}

/// Alternating optimization with the full-block curvature during the alternation,
/// then rounding onto the pilot grid and re-solving the power ratios exactly there.
pub fn ao_solve(
    params: &FastVaryingParams,
    tau0: f64,
    tol: f64,
    max_iter: usize,
    quad: &Quadrature,
    cache: &ZetaCache,
) -> Result<FvSolveResult> {
    check_params(params)?;
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(domain("ao_solve", tau0, "(0, 1)"));
    }
    let budget = params.kl_budget();
    let zeta_full = full_block_zetas(params, quad, cache)?;

    let mut tau = tau0;
    let (mut chi, mut lambda) = chi_given_tau(tau, params, &zeta_full, budget)?;
    let mut objective = ergodic_sum_rate(&chi, tau, params);
    let mut trace = vec![FvTracePoint { iteration: 0, tau, objective, lambda }];
    let mut flags = FvFlags::default();
    let mut converged = false;
    for iteration in 1..=max_iter {
        let next_tau = tau_given_chi(&chi, params)?;
        let (next_chi, next_lambda) = chi_given_tau(next_tau, params, &zeta_full, budget)?;
        let next = ergodic_sum_rate(&next_chi, next_tau, params);
        let change = (next - objective).abs();
        tau = next_tau;
        chi = next_chi;
        lambda = next_lambda;
        objective = next;
        trace.push(FvTracePoint { iteration, tau, objective, lambda });
        if change <= tol * objective.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.max_iter_reached = true;
        warn!("alternating optimization stopped at {max_iter} rounds");
    }

    let pilots = round_to_grid(tau, params.n);
    let tau = pilots as f64 / params.n as f64;
    debug_assert_eq!(pilot_symbols(params.n, tau), pilots);
    let zetas = zeta_values(params, tau, quad, cache)?;
    if zetas.iter().zip(&zeta_full).any(|(z, full)| z > full) {
        flags.zeta_order_violated = true;
        warn!("data-phase curvature exceeds the full-block value at {pilots} pilots");
    }
    let (chi, lambda) = chi_given_tau(tau, params, &zetas, budget)?;
    let objective = ergodic_sum_rate(&chi, tau, params);
    Ok(FvSolveResult {
        kl_used: weighted_energy(&chi, &zetas),
        chi,
        tau,
        pilots,
        objective,
        lambda,
        method: FvMethod::Ao,
        trace,
        flags,
    })
}
