//! Effective-sum-rate maximization when channels stay fixed over the whole transmission.
//!
//! Three solvers share one result type: the single-receiver closed form, a global
//! polyblock outer approximation, and a successive convex approximation.

mod poa;
mod sca;

pub use poa::{poa_solve, Polyblock};
pub use sca::{kkt_residual, sca_initial_state, sca_solve, sca_subproblem, surrogate_objective, ScaState};

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::covertness::{eta, solve_chi_star};
use crate::error::{CovertError, Result};
use crate::numerics::{bisect, expand_upper};
use crate::scenario::QuasiStaticParams;

/// `𝟙{B e^{−Aχ/γ} ≤ 1}(1 − B e^{−Aχ/γ}) ln(1+γ)`, in nats per channel use.
pub fn effective_rate(chi: f64, gamma: f64, a: f64, b: f64) -> f64 {
    if !(gamma > 0.0) || !(chi > 0.0) {
        return 0.0;
    }
    let exponent = b.ln() - a * chi / gamma;
    if exponent > 0.0 {
        return 0.0;
    }
    -exponent.exp_m1() * gamma.ln_1p()
}

/// `(1+κ)ln(1+1/κ)`, tending to one for large `κ`.
fn log_factor(kappa: f64) -> f64 {
    if kappa > 1e12 {
        1.0 + 0.5 / kappa
    } else {
        (1.0 + kappa) * (1.0 / kappa).ln_1p()
    }
}

/// Sign-equivalent of `B − Ξ(κ)` at `κ = r·κ_min`, `κ_min = ln B/(Aχ)`, in log form
/// so that neither large exponents nor tiny `Aχ` lose precision.
fn xi_gap(b: f64, kappa_min: f64, r: f64) -> f64 {
    let ln_b = b.ln();
    (b + b * ln_b * r * log_factor(r * kappa_min)).ln() - ln_b * r
}

/// `Ξ(κ) = e^{Aχκ} − ABχκ(1+κ)ln(1+1/κ)`.
pub fn xi(a: f64, b: f64, chi: f64, kappa: f64) -> f64 {
    (a * chi * kappa).exp() - a * b * chi * kappa * (1.0 + kappa) * (1.0 / kappa).ln_1p()
}

/// Rate-maximizing SINR threshold for one receiver at power ratio `chi`.
pub fn single_receiver_gamma(a: f64, b: f64, chi: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(crate::error::domain("single_receiver_gamma", a, "A > 0"));
    }
    if !(b > 1.0 && b.is_finite()) {
        return Err(crate::error::domain("single_receiver_gamma", b, "B > 1"));
    }
    if !(0.0..1.0).contains(&chi) {
        return Err(crate::error::domain("single_receiver_gamma", chi, "[0, 1)"));
    }
    if chi == 0.0 {
        return Ok(0.0);
    }
    let kappa_min = b.ln() / a / chi;
    let f = |r: f64| xi_gap(b, kappa_min, r);
    let hi = expand_upper(f, 1.0, 2.0, 1e300)?;
    let lo = if hi > 2.0 { 0.5 * hi } else { 1.0 };
    let r = bisect(f, lo, hi, 0.0, 200)?;
    Ok(1.0 / (r * kappa_min))
}

/// Best effective rate of one receiver at power ratio `chi`, with its threshold.
pub fn single_receiver_rate(a: f64, b: f64, chi: f64) -> Result<(f64, f64)> {
    let gamma = single_receiver_gamma(a, b, chi)?;
    Ok((effective_rate(chi, gamma, a, b), gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QsMethod {
    ClosedForm,
    Poa,
    Sca,
}

impl QsMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            QsMethod::ClosedForm => "closed_form",
            QsMethod::Poa => "poa",
            QsMethod::Sca => "sca",
        }
    }
}

/// One solver iteration: an upper bound (POA only, otherwise equal to the objective)
/// and the best feasible objective so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub bound: f64,
    pub best_feasible: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolveFlags {
    /// Iteration limit hit before the stopping rule was met.
    pub max_iter_reached: bool,
    /// The polyblock vertex cap evicted vertices, so the bound is heuristic.
    pub vertices_evicted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QsSolveResult {
    pub chi: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `ln(1+γ_k)` in nats.
    pub rates: Vec<f64>,
    pub objective: f64,
    pub method: QsMethod,
    pub trace: Vec<TracePoint>,
    /// `ε − Σ η(χ_k)`.
    pub constraint_slack: f64,
    pub flags: SolveFlags,
}

impl QsSolveResult {
    pub(crate) fn assemble(
        params: &QuasiStaticParams,
        chi: Vec<f64>,
        gamma: Vec<f64>,
        method: QsMethod,
        trace: Vec<TracePoint>,
        flags: SolveFlags,
    ) -> Result<Self> {
        let used = chi.iter().map(|&c| eta(c)).sum::<Result<f64>>()?;
        let objective = sum_rate(params, &chi, &gamma);
        let rates = gamma.iter().map(|g| g.ln_1p()).collect();
        Ok(QsSolveResult {
            chi,
            gamma,
            rates,
            objective,
            method,
            trace,
            constraint_slack: params.epsilon - used,
            flags,
        })
    }

    pub fn objective_bits(&self) -> f64 {
        self.objective / LN_2
    }
}

/// `Σ_k` effective rate at `(χ, γ)`.
pub fn sum_rate(params: &QuasiStaticParams, chi: &[f64], gamma: &[f64]) -> f64 {
    (0..params.len()).map(|k| effective_rate(chi[k], gamma[k], params.a[k], params.b[k])).sum()
}

/// Closed-form optimum for a single receiver: full covertness budget and the matching threshold.
pub fn closed_form_solve(params: &QuasiStaticParams) -> Result<QsSolveResult> {
    if params.len() != 1 {
        return Err(CovertError::InvalidConfig(format!(
            "the closed form applies to one receiver, got {}",
            params.len()
        )));
    }
    let chi = solve_chi_star(params.epsilon)?;
    let gamma = single_receiver_gamma(params.a[0], params.b[0], chi)?;
    let objective = effective_rate(chi, gamma, params.a[0], params.b[0]);
    let trace = vec![TracePoint { iteration: 0, bound: objective, best_feasible: objective }];
    QsSolveResult::assemble(params, vec![chi], vec![gamma], QsMethod::ClosedForm, trace, SolveFlags::default())
}
