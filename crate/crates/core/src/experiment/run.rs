//! Sweep execution and CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plot::plot_script;
use super::spec::{ExperimentSpec, FigureId, Regime};
use crate::covertness::{
    hellinger_tv_bound, pinsker_tv_bound, tv_numeric_k1, tv_numeric_product, tv_upper_bound, BandDistribution,
    ZetaCache,
};
use crate::error::Result;
use crate::fast_varying::{ao_solve, es_solve, FvMethod, FvSolveResult};
use crate::numerics::Quadrature;
use crate::quasi_static::{closed_form_solve, poa_solve, sca_initial_state, sca_solve, QsMethod, QsSolveResult};
use crate::scenario::{derive_fast_varying, derive_quasi_static, sample_scenario, scenario_seed};

/// One solver output for one quasi-static scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsRow {
    pub point: usize,
    pub sweep_value: f64,
    pub method: String,
    pub scenario: usize,
    pub scenario_seed: u64,
    pub epsilon: f64,
    /// `ok` or the error message.
    pub status: String,
    pub objective: Option<f64>,
    pub constraint_slack: Option<f64>,
    pub iterations: Option<usize>,
    pub flags: String,
    /// Power ratios, `;`-separated, printed to round-trip exactly.
    pub chi: String,
    pub gamma: String,
}

/// One solver output for one fast-varying scenario and block configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvRow {
    pub point: usize,
    pub sweep_value: f64,
    pub method: String,
    pub scenario: usize,
    pub scenario_seed: u64,
    pub block_length: usize,
    pub blocks: usize,
    pub epsilon: f64,
    pub status: String,
    pub objective: Option<f64>,
    pub tau: Option<f64>,
    pub pilots: Option<usize>,
    pub lambda: Option<f64>,
    pub kl_used: Option<f64>,
    pub flags: String,
    pub chi: String,
}

/// Mean and spread of one method at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub series: String,
    pub method: String,
    pub mean_objective: Option<f64>,
    pub std_objective: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

/// One solver iteration of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep_value: f64,
    pub scenario: usize,
    pub iteration: usize,
    pub objective: f64,
    pub tau: Option<f64>,
}

/// Total variation and its bounds at one common power ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvRow {
    pub chi: f64,
    pub receivers: usize,
    pub tv_numeric: f64,
    pub tv_ci: f64,
    pub proposed_bound: f64,
    pub pinsker_bound: f64,
    pub hellinger_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub failures: usize,
}

pub fn join_values(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|s| {
            s.parse::<f64>().map_err(|e| crate::error::CovertError::InvalidConfig(format!("bad number {s:?}: {e}")))
        })
        .collect()
}

pub(crate) fn main_file(figure: FigureId) -> String {
    format!("{}.csv", figure.as_str())
}

pub(crate) fn scenarios_file(figure: FigureId) -> String {
    format!("{}_scenarios.csv", figure.as_str())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn flag_text(pairs: &[(bool, &str)]) -> String {
    pairs.iter().filter(|(on, _)| *on).map(|(_, name)| *name).collect::<Vec<_>>().join("|")
}

/// Runs every sweep point and writes the result set under `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec, quad: &Quadrature) -> Result<RunSummary> {
    spec.validate()?;
    let dir = spec.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let spec_path = dir.join("spec.toml");
    fs::write(&spec_path, spec.to_toml()?)?;
    let figure = spec.figure;
    info!("running {} with {} sweep points", figure.as_str(), spec.sweep.len());

    let mut files = vec![spec_path];
    let (rows, failures) = match figure.regime() {
        Regime::Bounds => {
            let rows = tv_rows(spec)?;
            let path = dir.join(main_file(figure));
            write_csv(&path, &rows)?;
            files.push(path);
            (rows.len(), 0)
        }
        Regime::QuasiStatic => {
            let (rows, traces) = quasi_static_rows(spec);
            files.extend(write_results(spec, &dir, &rows, &traces, qs_summary(spec, &rows))?);
            (rows.len(), rows.iter().filter(|r| r.status != "ok").count())
        }
        Regime::Fast => {
            let (rows, traces) = fast_rows(spec, quad);
            files.extend(write_results(spec, &dir, &rows, &traces, fv_summary(spec, &rows))?);
            (rows.len(), rows.iter().filter(|r| r.status != "ok").count())
        }
    };
    let plot = dir.join(format!("plot_{}.py", figure.as_str()));
    fs::write(&plot, plot_script(figure))?;
    files.push(plot);
    if failures > 0 {
        warn!("{failures} of {rows} solver runs failed; see the status column");
    }
    Ok(RunSummary { dir, files, rows, failures })
}

fn write_results<T: Serialize>(
    spec: &ExperimentSpec,
    dir: &Path,
    rows: &[T],
    traces: &[TraceRow],
    summary: Vec<SummaryRow>,
) -> Result<Vec<PathBuf>> {
    let main = dir.join(main_file(spec.figure));
    if spec.figure.is_convergence() {
        write_csv(&main, traces)?;
    } else {
        write_csv(&main, &summary)?;
    }
    let per_scenario = dir.join(scenarios_file(spec.figure));
    write_csv(&per_scenario, rows)?;
    Ok(vec![main, per_scenario])
}

fn tv_rows(spec: &ExperimentSpec) -> Result<Vec<TvRow>> {
    let k = spec.tv.receivers;
    spec.sweep
        .par_iter()
        .enumerate()
        .map(|(i, &chi)| {
            let chis = vec![chi; k];
            let (tv, ci) = if k == 1 {
                // The noise floor only shifts the densities, so unit noise is exact.
                (tv_numeric_k1(&BandDistribution::from_chi(chi, 1.0), 1.0)?, 0.0)
            } else {
                let bands = vec![BandDistribution::from_chi(chi, 1.0); k];
                tv_numeric_product(&bands, spec.tv.samples, scenario_seed(spec.seed, i as u64))?
            };
            Ok(TvRow {
                chi,
                receivers: k,
                tv_numeric: tv,
                tv_ci: ci,
                proposed_bound: tv_upper_bound(&chis)?,
                pinsker_bound: pinsker_tv_bound(&chis)?,
                hellinger_bound: hellinger_tv_bound(&chis)?,
            })
        })
        .collect()
}

fn tasks(spec: &ExperimentSpec) -> Vec<(usize, f64, usize)> {
    spec.sweep.iter().enumerate().flat_map(|(p, &v)| (0..spec.scenarios_per_point).map(move |j| (p, v, j))).collect()
}

fn qs_methods(spec: &ExperimentSpec) -> Vec<QsMethod> {
    if spec.figure == FigureId::ScaConvergence {
        vec![QsMethod::Sca]
    } else {
        spec.quasi_static.methods.clone()
    }
}

fn solve_qs(
    spec: &ExperimentSpec,
    params: &crate::scenario::QuasiStaticParams,
    method: QsMethod,
) -> Result<QsSolveResult> {
    let s = &spec.quasi_static;
    match method {
        QsMethod::ClosedForm => closed_form_solve(params),
        QsMethod::Poa => poa_solve(params, s.delta, s.max_iter),
        QsMethod::Sca => sca_solve(params, &sca_initial_state(params)?, s.sca_tol, s.sca_max_iter),
    }
}

fn quasi_static_rows(spec: &ExperimentSpec) -> (Vec<QsRow>, Vec<TraceRow>) {
    let methods = qs_methods(spec);
    let epsilon = spec.quasi_static.epsilon;
    let per_task: Vec<Vec<(QsRow, Vec<TraceRow>)>> = tasks(spec)
        .into_par_iter()
        .map(|(point, value, j)| {
            let seed = scenario_seed(spec.seed, j as u64);
            let params =
                sample_scenario(&spec.scenario_at(value), seed).and_then(|inst| derive_quasi_static(&inst, epsilon));
            methods
                .iter()
                .map(|&method| {
                    let mut row = QsRow {
                        point,
                        sweep_value: value,
                        method: method.as_str().to_string(),
                        scenario: j,
                        scenario_seed: seed,
                        epsilon,
                        status: "ok".into(),
                        objective: None,
                        constraint_slack: None,
                        iterations: None,
                        flags: String::new(),
                        chi: String::new(),
                        gamma: String::new(),
                    };
                    let solved = params
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|p| solve_qs(spec, p, method).map_err(|e| e.to_string()));
                    let mut trace = Vec::new();
                    match solved {
                        Ok(r) => {
                            row.objective = Some(r.objective);
                            row.constraint_slack = Some(r.constraint_slack);
                            row.iterations = r.trace.last().map(|t| t.iteration);
                            row.flags = flag_text(&[
                                (r.flags.max_iter_reached, "max_iter"),
                                (r.flags.vertices_evicted, "vertices_evicted"),
                            ]);
                            row.chi = join_values(&r.chi);
                            row.gamma = join_values(&r.gamma);
                            trace = r
                                .trace
                                .iter()
                                .map(|t| TraceRow {
                                    sweep_value: value,
                                    scenario: j,
                                    iteration: t.iteration,
                                    objective: t.best_feasible,
                                    tau: None,
                                })
                                .collect();
                        }
                        Err(e) => row.status = format!("error: {e}"),
                    }
                    (row, trace)
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (row, trace) in per_task.into_iter().flatten() {
        rows.push(row);
        if spec.figure.is_convergence() {
            traces.extend(trace);
        }
    }
    (rows, traces)
}

fn fv_methods(spec: &ExperimentSpec) -> Vec<FvMethod> {
    if spec.figure == FigureId::AoConvergence {
        vec![FvMethod::Ao]
    } else {
        spec.fast.methods.clone()
    }
}

fn fast_rows(spec: &ExperimentSpec, quad: &Quadrature) -> (Vec<FvRow>, Vec<TraceRow>) {
    let methods = fv_methods(spec);
    let cache = ZetaCache::new();
    let fv = &spec.fast;
    let per_task: Vec<Vec<(FvRow, Vec<TraceRow>)>> = tasks(spec)
        .into_par_iter()
        .map(|(point, value, j)| {
            let seed = scenario_seed(spec.seed, j as u64);
            let instance = sample_scenario(&spec.scenario_at(value), seed);
            let mut out = Vec::new();
            for (n, l, epsilon) in spec.fast_series(value) {
                let params = instance.as_ref().map_err(|e| e.to_string()).and_then(|inst| {
                    derive_fast_varying(inst, n, l, epsilon)
                        .map(|mut p| {
                            p.observed = fv.observed;
                            p
                        })
                        .map_err(|e| e.to_string())
                });
                for &method in &methods {
                    let mut row = FvRow {
                        point,
                        sweep_value: value,
                        method: method.as_str().to_string(),
                        scenario: j,
                        scenario_seed: seed,
                        block_length: n,
                        blocks: l,
                        epsilon,
                        status: "ok".into(),
                        objective: None,
                        tau: None,
                        pilots: None,
                        lambda: None,
                        kl_used: None,
                        flags: String::new(),
                        chi: String::new(),
                    };
                    let solved: std::result::Result<FvSolveResult, String> =
                        params.as_ref().map_err(Clone::clone).and_then(|p| {
                            match method {
                                FvMethod::Es => es_solve(p, quad, &cache),
                                FvMethod::Ao => ao_solve(p, fv.tau0, fv.tol, fv.max_iter, quad, &cache),
                            }
                            .map_err(|e| e.to_string())
                        });
                    let mut trace = Vec::new();
                    match solved {
                        Ok(r) => {
                            row.objective = Some(r.objective);
                            row.tau = Some(r.tau);
                            row.pilots = Some(r.pilots);
                            row.lambda = Some(r.lambda);
                            row.kl_used = Some(r.kl_used);
                            row.flags = flag_text(&[
                                (r.flags.max_iter_reached, "max_iter"),
                                (r.flags.zeta_order_violated, "zeta_order"),
                            ]);
                            row.chi = join_values(&r.chi);
                            trace = r
                                .trace
                                .iter()
                                .map(|t| TraceRow {
                                    sweep_value: value,
                                    scenario: j,
                                    iteration: t.iteration,
                                    objective: t.objective,
                                    tau: Some(t.tau),
                                })
                                .collect();
                        }
                        Err(e) => row.status = format!("error: {e}"),
                    }
                    out.push((row, trace));
                }
            }
            out
        })
        .collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (row, trace) in per_task.into_iter().flatten() {
        rows.push(row);
        if spec.figure.is_convergence() {
            traces.extend(trace);
        }
    }
    (rows, traces)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

fn summarize<'a>(
    value: f64,
    series: String,
    method: &str,
    objectives: impl Iterator<Item = Option<f64>> + 'a,
) -> SummaryRow {
    let mut ok = Vec::new();
    let mut failures = 0;
    for o in objectives {
        match o {
            Some(v) => ok.push(v),
            None => failures += 1,
        }
    }
    let (mean, std) = mean_std(&ok);
    SummaryRow {
        sweep_value: value,
        series,
        method: method.to_string(),
        mean_objective: mean,
        std_objective: std,
        count: ok.len(),
        failures,
    }
}

fn qs_summary(spec: &ExperimentSpec, rows: &[QsRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for (p, &value) in spec.sweep.iter().enumerate() {
        for method in qs_methods(spec) {
            let name = method.as_str();
            let objectives = rows.iter().filter(|r| r.point == p && r.method == name).map(|r| r.objective);
            out.push(summarize(value, String::new(), name, objectives));
        }
    }
    out
}

fn fv_summary(spec: &ExperimentSpec, rows: &[FvRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for (p, &value) in spec.sweep.iter().enumerate() {
        for (_, l, _) in spec.fast_series(value) {
            let series = if spec.figure == FigureId::FastRateVsEpsilon { format!("L={l}") } else { String::new() };
            for method in fv_methods(spec) {
                let name = method.as_str();
                let objectives =
                    rows.iter().filter(|r| r.point == p && r.blocks == l && r.method == name).map(|r| r.objective);
                out.push(summarize(value, series.clone(), name, objectives));
            }
        }
    }
    out
}

/// Reads back a CSV written by a run.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}
