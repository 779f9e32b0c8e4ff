//! Successive convex approximation in the variables `t_k = χ_k/γ_k` and `γ_k`,
//! with the bilinear budget `Σ t_k γ_k ≤ ε` standing in for `Σ η(χ_k) ≤ ε`.
//!
//! Each step replaces the bilinear budget by its tangent quadratic majorant
//! `½Σ(c_k t_k² + γ_k²/c_k)`, `c_k = γ_k/t_k` at the current iterate, and the
//! product objective by `‖α−β‖² − 2ρᵀ(α+β)`, `ρ = α + β` at the current iterate.

use log::warn;

use super::{single_receiver_gamma, QsMethod, QsSolveResult, SolveFlags, TracePoint};
use crate::covertness::solve_chi_star;
use crate::error::{domain, CovertError, Result};
use crate::numerics::{bisect, bisect_log};
use crate::scenario::QuasiStaticParams;

const DEAD_SHARE: f64 = 1e-13;

/// Iterate of the SCA method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub t: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub iteration: usize,
    /// `Σ α_k β_k`, the effective sum rate when the slacks are tight.
    pub objective: f64,
}

impl ScaState {
    /// Builds a state with tight slacks from `t` and `γ`.
    pub fn from_tg(params: &QuasiStaticParams, t: Vec<f64>, gamma: Vec<f64>, iteration: usize) -> Self {
        let alpha: Vec<f64> = (0..params.len()).map(|k| outage_margin(params, k, t[k])).collect();
        let beta: Vec<f64> = gamma.iter().map(|g| g.ln_1p()).collect();
        let objective = alpha.iter().zip(&beta).map(|(a, b)| a * b).sum();
        ScaState { t, gamma, alpha, beta, iteration, objective }
    }

    /// `Σ t_k γ_k`.
    pub fn bilinear_budget(&self) -> f64 {
        self.t.iter().zip(&self.gamma).map(|(t, g)| t * g).sum()
    }

    pub fn chi(&self) -> Vec<f64> {
        self.t.iter().zip(&self.gamma).map(|(t, g)| t * g).collect()
    }
}

/// `1 − B e^{−A t}`, clamped at zero.
fn outage_margin(params: &QuasiStaticParams, k: usize, t: f64) -> f64 {
    (-(params.b[k].ln() - params.a[k] * t).exp_m1()).max(0.0)
}

/// Starting point: equal power ratios spending half the covertness budget, and the
/// matching single-receiver thresholds.
pub fn sca_initial_state(params: &QuasiStaticParams) -> Result<ScaState> {
    let k_count = params.len() as f64;
    let mut chi = solve_chi_star(params.epsilon / (2.0 * k_count))?;
    if k_count * chi > params.epsilon {
        chi = params.epsilon / (2.0 * k_count);
    }
    let mut t = Vec::with_capacity(params.len());
    let mut gamma = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let g = single_receiver_gamma(params.a[k], params.b[k], chi)?;
        t.push(chi / g);
        gamma.push(g);
    }
    Ok(ScaState::from_tg(params, t, gamma, 0))
}

/// Per-band data of the convex surrogate.
#[derive(Debug, Clone, Copy)]
struct BandSurrogate {
    a: f64,
    ln_b: f64,
    t_min: f64,
    /// Budget curvature `γ/t` at the anchor; zero marks a band that is switched off.
    c: f64,
    rho: f64,
    t_anchor: f64,
}

#[derive(Debug, Clone, Copy)]
struct BandPoint {
    t: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
}

impl BandSurrogate {
    fn margin(&self, t: f64) -> f64 {
        (-(self.ln_b - self.a * t).exp_m1()).max(0.0)
    }

    fn margin_slope(&self, t: f64) -> f64 {
        self.a * (self.ln_b - self.a * t).exp()
    }

    /// Partial derivatives of `min_{α≤u, β≤v} (α−β)² − 2ρ(α+β)` in `(u, v)`.
    fn value_slopes(&self, u: f64, v: f64) -> (f64, f64) {
        let rho = self.rho;
        if u - v > rho {
            (0.0, -4.0 * rho)
        } else if v - u > rho {
            (-4.0 * rho, 0.0)
        } else {
            (2.0 * (u - v) - 2.0 * rho, -2.0 * (u - v) - 2.0 * rho)
        }
    }

    fn gamma_at(&self, t: f64, lambda: f64) -> f64 {
        let u = self.margin(t);
        let slope = |g: f64| self.value_slopes(u, g.ln_1p()).1 / (1.0 + g) + lambda * g / self.c;
        if slope(0.0) >= 0.0 {
            return 0.0;
        }
        let hi = (4.0 * self.rho * self.c / lambda).sqrt();
        if slope(hi) <= 0.0 {
            return hi;
        }
        bisect(slope, 0.0, hi, 0.0, 200).unwrap_or(hi)
    }

    fn solve(&self, lambda: f64) -> BandPoint {
        if self.c == 0.0 {
            return BandPoint { t: self.t_anchor, gamma: 0.0, alpha: 0.0, beta: 0.0 };
        }
        let slope = |t: f64| {
            let g = self.gamma_at(t, lambda);
            self.value_slopes(self.margin(t), g.ln_1p()).0 * self.margin_slope(t) + lambda * self.c * t
        };
        let t = if slope(self.t_min) >= 0.0 {
            self.t_min
        } else {
            let hi = self.t_min + 4.0 * self.rho * self.a / (lambda * self.c);
            if slope(hi) <= 0.0 {
                hi
            } else {
                bisect(slope, self.t_min, hi, 0.0, 200).unwrap_or(hi)
            }
        };
        let gamma = self.gamma_at(t, lambda);
        let (u, v) = (self.margin(t), gamma.ln_1p());
        BandPoint { t, gamma, alpha: u.min(v + self.rho), beta: v.min(u + self.rho) }
    }

    fn budget(&self, p: &BandPoint) -> f64 {
        if self.c == 0.0 {
            0.0
        } else {
            0.5 * (self.c * p.t * p.t + p.gamma * p.gamma / self.c)
        }
    }
}

/// Surrogate objective `‖α−β‖² − 2ρᵀ(α+β)` at `state` with `ρ` taken from `anchor`.
pub fn surrogate_objective(anchor: &ScaState, state: &ScaState) -> f64 {
    (0..anchor.t.len())
        .map(|k| {
            let (a, b) = (state.alpha[k], state.beta[k]);
            (a - b) * (a - b) - 2.0 * (anchor.alpha[k] + anchor.beta[k]) * (a + b)
        })
        .sum()
}

/// Solves one convex surrogate around `state` by bisection on the budget multiplier.
pub fn sca_subproblem(state: &ScaState, params: &QuasiStaticParams) -> Result<ScaState> {
    let k_count = params.len();
    let bands: Vec<BandSurrogate> = (0..k_count)
        .map(|k| {
            let (t, g) = (state.t[k], state.gamma[k]);
            let rho = state.alpha[k] + state.beta[k];
            // A band whose share of the budget has decayed to rounding level is switched
            // off; otherwise its vanishing curvature lets t run away.
            let live = t > 0.0 && g > 0.0 && rho > 0.0 && t * g > DEAD_SHARE * params.epsilon;
            BandSurrogate {
                a: params.a[k],
                ln_b: params.b[k].ln(),
                t_min: params.b[k].ln() / params.a[k],
                c: if live { g / t } else { 0.0 },
                rho,
                t_anchor: t,
            }
        })
        .collect();
    if bands.iter().all(|b| b.c == 0.0) {
        return Ok(state.clone());
    }
    let eps = params.epsilon;
    let solve_all = |lambda: f64| bands.iter().map(|b| b.solve(lambda)).collect::<Vec<_>>();
    let budget = |pts: &[BandPoint]| bands.iter().zip(pts).map(|(b, p)| b.budget(p)).sum::<f64>();

    // The surrogate keeps improving as t grows and never attains its infimum without
    // the budget, so the budget is active and the multiplier strictly positive.
    let mut hi = 1.0;
    while budget(&solve_all(hi)) > eps {
        hi *= 4.0;
        if hi > 1e300 {
            return Err(CovertError::Bracket { op: "sca_subproblem", detail: "no feasible multiplier".into() });
        }
    }
    let mut lo = hi / 4.0;
    while budget(&solve_all(lo)) <= eps {
        lo /= 4.0;
        if lo < 1e-300 {
            return Err(CovertError::Bracket { op: "sca_subproblem", detail: "budget never binds".into() });
        }
    }
    let mut feasible = hi;
    bisect_log(
        |lambda| {
            let excess = (budget(&solve_all(lambda)) - eps).min(f64::MAX);
            if excess <= 0.0 {
                feasible = feasible.min(lambda);
            }
            excess
        },
        lo,
        hi,
        1e-15,
        200,
    )?;
    let pts = solve_all(feasible);
    let objective = pts.iter().map(|p| p.alpha * p.beta).sum();
    Ok(ScaState {
        t: pts.iter().map(|p| p.t).collect(),
        gamma: pts.iter().map(|p| p.gamma).collect(),
        alpha: pts.iter().map(|p| p.alpha).collect(),
        beta: pts.iter().map(|p| p.beta).collect(),
        iteration: state.iteration + 1,
        objective,
    })
}

fn check_state(params: &QuasiStaticParams, state: &ScaState) -> Result<()> {
    let k_count = params.len();
    if [state.t.len(), state.gamma.len(), state.alpha.len(), state.beta.len()].iter().any(|&n| n != k_count) {
        return Err(CovertError::InvalidConfig("SCA state length does not match the receivers".into()));
    }
    let used = state.bilinear_budget();
    if used > params.epsilon * (1.0 + 1e-12) {
        return Err(domain("sca_solve", used, "Σ t γ <= epsilon"));
    }
    for k in 0..k_count {
        let slack_a = outage_margin(params, k, state.t[k]) - state.alpha[k];
        let slack_b = state.gamma[k].ln_1p() - state.beta[k];
        if state.alpha[k] < 0.0 || state.beta[k] < 0.0 || slack_a < -1e-8 || slack_b < -1e-8 {
            return Err(domain("sca_solve", k as f64, "feasible slack variables"));
        }
    }
    Ok(())
}

/// Runs the SCA iteration from a feasible `init` until the relative objective change drops below `tol`.
pub fn sca_solve(params: &QuasiStaticParams, init: &ScaState, tol: f64, max_iter: usize) -> Result<QsSolveResult> {
    check_state(params, init)?;
    let mut state = ScaState::from_tg(params, init.t.clone(), init.gamma.clone(), 0);
    let mut trace = vec![TracePoint { iteration: 0, bound: state.objective, best_feasible: state.objective }];
    let mut flags = SolveFlags::default();
    loop {
        if state.iteration >= max_iter {
            flags.max_iter_reached = true;
            warn!("SCA stopped at {max_iter} iterations");
            break;
        }
        let next = sca_subproblem(&state, params)?;
        let next = ScaState::from_tg(params, next.t, next.gamma, next.iteration);
        let change = (next.objective - state.objective).abs() / state.objective.abs().max(f64::MIN_POSITIVE);
        trace.push(TracePoint { iteration: next.iteration, bound: next.objective, best_feasible: next.objective });
        let fixed = next.t == state.t && next.gamma == state.gamma;
        state = next;
        if change < tol || fixed {
            break;
        }
    }
    QsSolveResult::assemble(params, state.chi(), state.gamma.clone(), QsMethod::Sca, trace, flags)
}

/// Stationarity residual of `max Σ(1 − B e^{−At}) ln(1+γ)` s.t. `Σ tγ ≤ ε`.
///
/// The multiplier is estimated at the band with the largest rate. Each variable
/// contributes its natural residual `|x − max(lb, x + ∂L/μ)|`, so bands switched
/// off at `γ = 0` count as stationary; the relative budget slack is added.
pub fn kkt_residual(params: &QuasiStaticParams, t: &[f64], gamma: &[f64]) -> f64 {
    let k_count = params.len();
    let slope = |k: usize| params.a[k] * (params.b[k].ln() - params.a[k] * t[k]).exp();
    let rate = |k: usize| outage_margin(params, k, t[k]) * gamma[k].ln_1p();
    let Some(lead) = (0..k_count).filter(|&k| gamma[k] > 0.0).max_by(|&i, &j| rate(i).total_cmp(&rate(j))) else {
        return 0.0;
    };
    let mu = 0.5
        * (slope(lead) * gamma[lead].ln_1p() / gamma[lead]
            + outage_margin(params, lead, t[lead]) / ((1.0 + gamma[lead]) * t[lead]));
    let mut worst = 0.0f64;
    for k in 0..k_count {
        let t_min = params.b[k].ln() / params.a[k];
        let grad_t = slope(k) * gamma[k].ln_1p() - mu * gamma[k];
        let grad_g = outage_margin(params, k, t[k]) / (1.0 + gamma[k]) - mu * t[k];
        worst = worst.max((t[k] - (t[k] + grad_t / mu).max(t_min)).abs());
        worst = worst.max((gamma[k] - (gamma[k] + grad_g / mu).max(0.0)).abs());
    }
    let used: f64 = t.iter().zip(gamma).map(|(t, g)| t * g).sum();
    worst + (params.epsilon - used).abs() / params.epsilon
}
