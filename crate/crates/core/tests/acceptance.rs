//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use covert_core::covertness::{
    eta, kl_divergence, pinsker_tv_bound, solve_chi_star, tv_numeric_k1, tv_numeric_product, tv_upper_bound, zeta,
    BandDistribution, ZetaCache,
};
use covert_core::detection::{simulate_bands, DetectorKind, Observation};
use covert_core::experiment::{read_csv, run_experiment, ExperimentSpec, FigureId, SummaryRow};
use covert_core::fast_varying::{
    ao_solve, chi_given_tau, ergodic_sum_rate, es_solve, tau_given_chi, zeta_values, FvMethod,
};
use covert_core::numerics::Quadrature;
use covert_core::quasi_static::{
    effective_rate, poa_solve, sca_initial_state, sca_solve, sca_subproblem, single_receiver_gamma,
    single_receiver_rate, QsMethod,
};
use covert_core::scenario::{
    beamforming_gain, derive_fast_varying, derive_quasi_static, sample_scenario, scenario_seed, FastVaryingParams,
    QuasiStaticParams, ScenarioConfig,
};

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn quasi_static_instance(receivers: usize, index: u64) -> QuasiStaticParams {
    let config = ScenarioConfig { receivers, ..ScenarioConfig::default() };
    let instance = sample_scenario(&config, scenario_seed(1, index)).unwrap();
    derive_quasi_static(&instance, 0.005).unwrap()
}

fn fast_instance(index: u64) -> FastVaryingParams {
    let config = ScenarioConfig { receivers: 4, ..ScenarioConfig::default() };
    let instance = sample_scenario(&config, scenario_seed(1, index)).unwrap();
    derive_fast_varying(&instance, 100, 100, 0.05).unwrap()
}

fn tv_identity() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let chi = i as f64 / 10.0;
        let tv = tv_numeric_k1(&BandDistribution::from_chi(chi, 3.0e5), 1e-11).unwrap();
        worst = worst.max((tv - chi.powf(1.0 / (1.0 - chi))).abs());
    }
    outcome(worst <= 1e-6, format!("max |numeric - closed form| = {worst:.2e}"))
}

fn bound_soundness() -> Outcome {
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut violations = 0;
    let mut not_tighter = 0;
    for &a in &grid {
        for &b in &grid {
            let bands = [BandDistribution::from_chi(a, 5.0), BandDistribution::from_chi(b, 7.0)];
            let (tv, ci) = tv_numeric_product(&bands, 1_000_000, 11).unwrap();
            let sum = a.powf(1.0 / (1.0 - a)) + b.powf(1.0 / (1.0 - b));
            if tv > sum + 3.0 * ci {
                violations += 1;
            }
            let proposed = tv_upper_bound(&[a, b]).unwrap();
            if a.max(b) <= 0.5 && proposed >= pinsker_tv_bound(&[a, b]).unwrap() {
                not_tighter += 1;
            }
        }
    }
    outcome(
        violations == 0 && not_tighter == 0,
        format!("{violations} bound violations, {not_tighter} points where Pinsker is as tight"),
    )
}

fn detection_limit(quad: &Quadrature) -> Outcome {
    let config = ScenarioConfig { receivers: 1, ..ScenarioConfig::default() };
    let instance = sample_scenario(&config, 1).unwrap();
    let obs = Observation { symbols: 500, blocks: 1, trials: 100_000, seed: 21 };
    let est = simulate_bands(&[instance.band(0, 0.9)], obs, DetectorKind::Lrt, quad).unwrap();
    let limit = 1.0 - 0.9f64.powf(10.0);
    let gap = (est.sum_error - limit).abs();
    outcome(
        gap <= 3.0 * est.ci_half_width,
        format!("sum error {:.5} vs limit {limit:.6}, gap {gap:.2e}, CI {:.2e}", est.sum_error, est.ci_half_width),
    )
}

fn lrt_optimality(quad: &Quadrature) -> Outcome {
    let bands = [BandDistribution::from_chi(0.15, 40.0), BandDistribution::from_chi(0.6, 3.0)];
    let obs = Observation { symbols: 30, blocks: 2, trials: 100_000, seed: 5 };
    let lrt = simulate_bands(&bands, obs, DetectorKind::Lrt, quad).unwrap();
    let energy = simulate_bands(&bands, obs, DetectorKind::Energy, quad).unwrap();
    outcome(
        lrt.sum_error <= energy.sum_error + 2.0 * lrt.ci_half_width.max(energy.ci_half_width),
        format!("LRT {:.4} vs energy {:.4} (CI {:.4})", lrt.sum_error, energy.sum_error, lrt.ci_half_width),
    )
}

/// Projected gradient ascent of the fixed-τ rate in coordinates `u = √(ζ/2)·χ`,
/// where the covertness budget is a ball.
fn projected_gradient_rate(params: &FastVaryingParams, tau: f64, zetas: &[f64], budget: f64) -> f64 {
    let k_count = params.len();
    let scale: Vec<f64> = zetas.iter().map(|z| (0.5 * z).sqrt()).collect();
    let radius = budget.sqrt();
    let chi_of = |u: &[f64]| u.iter().zip(&scale).map(|(u, s)| u / s).collect::<Vec<_>>();
    let value = |u: &[f64]| ergodic_sum_rate(&chi_of(u), tau, params);
    let project = |u: &mut Vec<f64>| {
        for x in u.iter_mut() {
            *x = x.max(0.0);
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > radius {
            for x in u.iter_mut() {
                *x *= radius / norm;
            }
        }
    };
    let mut u = vec![radius / (k_count as f64).sqrt(); k_count];
    let mut f = value(&u);
    let mut step = radius;
    for _ in 0..20_000 {
        let chi = chi_of(&u);
        let grad: Vec<f64> = (0..k_count)
            .map(|k| {
                let g = tau * params.g[k];
                let e = tau * params.e[k] + params.mu_tilde[k];
                let c = tau * params.f1[k] + params.f2[k];
                let d = (g + e) / ((g + e) * chi[k] + c) - e / (e * chi[k] + c);
                (1.0 - tau) * d / scale[k]
            })
            .collect();
        let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut improved = false;
        while step > radius * 1e-16 {
            let mut trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x + step * g / norm).collect();
            project(&mut trial);
            let ft = value(&trial);
            if ft > f {
                u = trial;
                f = ft;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    f
}

fn step_oracles(quad: &Quadrature) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let start = Instant::now();
    let mut gamma_shortfall = 0.0f64;
    for index in 0..5 {
        let params = quasi_static_instance(2, index);
        let chi = solve_chi_star(params.epsilon).unwrap();
        for k in 0..params.len() {
            let (a, b) = (params.a[k], params.b[k]);
            let best = effective_rate(chi, single_receiver_gamma(a, b, chi).unwrap(), a, b);
            let top = a * chi / b.ln();
            let grid = (1..=1000).map(|i| effective_rate(chi, top * i as f64 / 1000.0, a, b)).fold(0.0, f64::max);
            gamma_shortfall = gamma_shortfall.max(grid - best);
        }
    }
    pass &= gamma_shortfall <= 0.0 && start.elapsed().as_secs_f64() < 5.0;
    notes.push(format!("gamma grid excess {gamma_shortfall:.1e}"));

    let start = Instant::now();
    let cache = ZetaCache::new();
    let mut chi_gap = 0.0f64;
    for index in 0..3 {
        let params = fast_instance(index);
        for tau in [0.05, 0.12, 0.4] {
            let zetas = zeta_values(&params, tau, quad, &cache).unwrap();
            let budget = params.kl_budget();
            let (chi, _) = chi_given_tau(tau, &params, &zetas, budget).unwrap();
            let ours = ergodic_sum_rate(&chi, tau, &params);
            let oracle = projected_gradient_rate(&params, tau, &zetas, budget);
            chi_gap = chi_gap.max((oracle - ours).abs());
        }
    }
    pass &= chi_gap <= 1e-6 && start.elapsed().as_secs_f64() < 5.0;
    notes.push(format!("power step vs first-order solver |gap| {chi_gap:.1e}"));

    let start = Instant::now();
    let mut tau_shortfall = 0.0f64;
    for index in 0..5 {
        let params = fast_instance(index);
        let zetas = zeta_values(&params, 0.1, quad, &cache).unwrap();
        let (chi, _) = chi_given_tau(0.1, &params, &zetas, params.kl_budget()).unwrap();
        let tau = tau_given_chi(&chi, &params).unwrap();
        let best = ergodic_sum_rate(&chi, tau, &params);
        let grid = (1..=1000).map(|i| ergodic_sum_rate(&chi, i as f64 / 1001.0, &params)).fold(0.0, f64::max);
        tau_shortfall = tau_shortfall.max(grid - best);
    }
    pass &= tau_shortfall <= 0.0 && start.elapsed().as_secs_f64() < 5.0;
    notes.push(format!("tau grid excess {tau_shortfall:.1e}"));
    outcome(pass, notes.join(", "))
}

fn global_vs_local() -> Outcome {
    let mut worst_ratio = f64::INFINITY;
    let mut grid_shortfall = f64::NEG_INFINITY;
    for (receivers, delta) in [(2, 1e-4), (3, 1e-3)] {
        for index in 0..10 {
            let params = quasi_static_instance(receivers, 100 + index);
            let poa = poa_solve(&params, delta, 400_000).unwrap();
            let init = sca_initial_state(&params).unwrap();
            let sca = sca_solve(&params, &init, 1e-6, 100).unwrap();
            worst_ratio = worst_ratio.min(sca.objective / poa.objective);
            if receivers == 2 {
                let top = solve_chi_star(params.epsilon).unwrap();
                let n = 1000;
                let xs: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
                let costs: Vec<f64> = xs.iter().map(|&x| eta(x).unwrap()).collect();
                let rates: Vec<Vec<f64>> = (0..2)
                    .map(|k| xs.iter().map(|&x| single_receiver_rate(params.a[k], params.b[k], x).unwrap().0).collect())
                    .collect();
                let mut best = 0.0f64;
                for i in 0..=n {
                    for j in 0..=n {
                        if costs[i] + costs[j] <= params.epsilon {
                            best = best.max(rates[0][i] + rates[1][j]);
                        }
                    }
                }
                grid_shortfall = grid_shortfall.max(best - delta - poa.objective);
            }
        }
    }
    outcome(
        worst_ratio >= 0.95 && grid_shortfall <= 0.0,
        format!("worst SCA/POA {worst_ratio:.4}, grid minus delta exceeds POA by at most {grid_shortfall:.1e}"),
    )
}

fn es_vs_ao(quad: &Quadrature) -> Outcome {
    let cache = ZetaCache::new();
    let mut worst_ratio = f64::INFINITY;
    let mut converged = 0;
    let count = 20;
    for index in 0..count {
        let params = fast_instance(200 + index);
        let es = es_solve(&params, quad, &cache).unwrap();
        let ao = ao_solve(&params, 0.5, 1e-4, 10, quad, &cache).unwrap();
        assert_eq!(ao.method, FvMethod::Ao);
        worst_ratio = worst_ratio.min(ao.objective / es.objective);
        if !ao.flags.max_iter_reached {
            converged += 1;
        }
    }
    outcome(
        worst_ratio >= 0.99 && converged * 10 >= count * 9,
        format!("worst AO/ES {worst_ratio:.4}, {converged}/{count} converged within 10 rounds"),
    )
}

fn quadratic_kl_limit(quad: &Quadrature) -> Outcome {
    let mut ratios = Vec::new();
    let mut pass = true;
    for (q, n) in [(1.0, 10), (5.0, 50), (10.0, 90)] {
        let p = 1e-3 * q;
        let ratio = kl_divergence(p, q, n, quad).unwrap() / (zeta(q, n, quad).unwrap() * p * p / (2.0 * q * q));
        pass &= (0.99..=1.0).contains(&ratio);
        ratios.push(format!("(q={q}, n={n}) {ratio:.5}"));
    }
    outcome(pass, ratios.join(", "))
}

fn summary_means(dir: &Path, figure: FigureId, method: &str) -> BTreeMap<String, Vec<(f64, f64)>> {
    let rows: Vec<SummaryRow> = read_csv(&dir.join(format!("{}.csv", figure.as_str()))).unwrap();
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.into_iter().filter(|r| r.method == method) {
        series.entry(r.series).or_default().push((r.sweep_value, r.mean_objective.unwrap_or(f64::NAN)));
    }
    series
}

fn nondecreasing(points: &[(f64, f64)]) -> bool {
    points.windows(2).all(|w| w[1].1 >= w[0].1)
}

fn figure_trends(quad: &Quadrature) -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let run = |mut spec: ExperimentSpec| {
        spec.output_dir = root.path().join(spec.figure.as_str());
        run_experiment(&spec, quad).unwrap();
        spec
    };
    let mut notes = Vec::new();

    let mut spec = ExperimentSpec::new(FigureId::RateVsJamming, vec![15.0, 20.0, 25.0, 30.0, 35.0]);
    spec.quasi_static.methods = vec![QsMethod::Poa];
    let spec = run(spec);
    let q_ok = summary_means(&spec.output_dir, spec.figure, "poa").values().all(|s| nondecreasing(s));
    notes.push(format!("Q {}", if q_ok { "ok" } else { "broken" }));

    let mut spec = ExperimentSpec::new(FigureId::RateVsAntennas, vec![5.0, 10.0, 20.0, 40.0]);
    spec.quasi_static.methods = vec![QsMethod::Poa];
    let spec = run(spec);
    let m_ok = summary_means(&spec.output_dir, spec.figure, "poa").values().all(|s| nondecreasing(s));
    notes.push(format!("M {}", if m_ok { "ok" } else { "broken" }));

    let mut spec = ExperimentSpec::new(FigureId::FastRateVsEpsilon, vec![0.01, 0.02, 0.05, 0.1, 0.2]);
    spec.fast.methods = vec![FvMethod::Ao];
    let spec = run(spec);
    let eps_ok =
        summary_means(&spec.output_dir, spec.figure, "ao").values().all(|s| s.windows(2).all(|w| w[1].1 > w[0].1));
    notes.push(format!("eps {}", if eps_ok { "ok" } else { "broken" }));

    let mut spec = ExperimentSpec::new(FigureId::FastRateVsJamming, vec![15.0, 25.0, 45.0]);
    spec.fast.methods = vec![FvMethod::Es];
    let spec = run(spec);
    let fast = summary_means(&spec.output_dir, spec.figure, "es");
    let curve = fast.values().next().unwrap();
    let peak_ok = curve[1].1 > curve[0].1 && curve[1].1 > curve[2].1;
    notes.push(format!(
        "fast Q {:.3}/{:.3}/{:.3} nats {}",
        curve[0].1,
        curve[1].1,
        curve[2].1,
        if peak_ok { "non-monotone" } else { "monotone" }
    ));
    outcome(q_ok && m_ok && eps_ok && peak_ok, notes.join(", "))
}

fn read_dir_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn property_suites(quad: &Quadrature) -> Outcome {
    let mut failures = Vec::new();

    let n = 2000;
    let xs: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| eta(x).unwrap()).collect();
    let concave = ys.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-12);
    let below = xs.iter().zip(&ys).all(|(x, y)| y <= x);
    if !(concave && below) {
        failures.push("eta shape");
    }

    let cache = ZetaCache::new();
    let mut residual = 0.0f64;
    for index in 0..5 {
        let params = fast_instance(index);
        for tau in [0.02, 0.1, 0.3, 0.7] {
            let zetas = zeta_values(&params, tau, quad, &cache).unwrap();
            let budget = params.kl_budget();
            let (chi, _) = chi_given_tau(tau, &params, &zetas, budget).unwrap();
            let used: f64 = chi.iter().zip(&zetas).map(|(c, z)| 0.5 * z * c * c).sum();
            residual = residual.max((used - budget).abs() / budget);
        }
        let qs = quasi_static_instance(3, index);
        let poa = poa_solve(&qs, 1e-3, 200_000).unwrap();
        residual = residual.max(poa.constraint_slack.abs() / qs.epsilon);
        let state = sca_subproblem(&sca_initial_state(&qs).unwrap(), &qs).unwrap();
        for k in 0..qs.len() {
            if state.alpha[k] > 0.0 && state.beta[k] > 0.0 {
                let margin = 1.0 - qs.b[k] * (-qs.a[k] * state.t[k]).exp();
                residual = residual.max((state.alpha[k] - margin).abs());
                residual = residual.max((state.beta[k] - state.gamma[k].ln_1p()).abs());
            }
        }
    }
    if residual > 1e-10 {
        failures.push("activity");
    }

    let root = tempfile::tempdir().unwrap();
    let runs = [
        (FigureId::RateVsJamming, vec![20.0, 30.0]),
        (FigureId::FastRateVsJamming, vec![20.0, 30.0]),
        (FigureId::AoConvergence, vec![2.0, 4.0]),
    ];
    for (figure, sweep) in runs {
        let mut spec = ExperimentSpec::new(figure, sweep);
        spec.scenarios_per_point = 3;
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            spec.output_dir = root.path().join(format!("{}_{attempt}", figure.as_str()));
            run_experiment(&spec, quad).unwrap();
            outputs.push(read_dir_csvs(&spec.output_dir));
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            failures.push("determinism");
        }
    }

    let mut identity = 0.0f64;
    for m in 1..=128usize {
        let mf = m as f64;
        // Γ(M+½)/Γ(M) by its product recurrence from Γ(3/2)/Γ(1) = √π/2.
        let ratio = (1..m).fold(std::f64::consts::PI.sqrt() / 2.0, |r, j| r * (j as f64 + 0.5) / j as f64);
        let g = beamforming_gain(m);
        identity = identity.max((g - ratio * ratio).abs() / mf);
        let config = ScenarioConfig { antennas: m, ..ScenarioConfig::default() };
        let params = derive_fast_varying(&sample_scenario(&config, 3).unwrap(), 100, 10, 0.05).unwrap();
        identity = identity.max((params.g_const + params.e_const - mf).abs() / mf);
    }
    if identity > 1e-12 {
        failures.push("G + E = M");
    }

    outcome(
        failures.is_empty(),
        format!(
            "activity residual {residual:.1e}, beamforming identity {identity:.1e}{}",
            if failures.is_empty() { String::new() } else { format!(", failed: {}", failures.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let quad = Quadrature::default();
    let criteria: Vec<(&str, Check)> = vec![
        ("closed-form total variation", Box::new(tv_identity)),
        ("bound soundness and tightness", Box::new(bound_soundness)),
        ("detection limit", Box::new(|| detection_limit(&quad))),
        ("LRT beats energy detection", Box::new(|| lrt_optimality(&quad))),
        ("single-step oracles", Box::new(|| step_oracles(&quad))),
        ("local vs global quasi-static", Box::new(global_vs_local)),
        ("alternating vs exhaustive", Box::new(|| es_vs_ao(&quad))),
        ("quadratic KL limit", Box::new(|| quadratic_kl_limit(&quad))),
        ("figure trends", Box::new(|| figure_trends(&quad))),
        ("property suites", Box::new(|| property_suites(&quad))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.1} s)",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
