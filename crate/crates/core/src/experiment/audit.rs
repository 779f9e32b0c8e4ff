//! Replays stored allocations through the adversary's likelihood-ratio detector.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{parse_values, read_csv, scenarios_file, FvRow, QsRow};
use super::spec::{ExperimentSpec, Regime};
use crate::detection::{covertness_audit, Observation};
use crate::error::{CovertError, Result};
use crate::fast_varying::ergodic_sum_rate;
use crate::numerics::Quadrature;
use crate::quasi_static::sum_rate;
use crate::scenario::{derive_fast_varying, derive_quasi_static, sample_scenario, scenario_seed, ScenarioInstance};

/// Stream tag separating audit draws from scenario draws.
const AUDIT_STREAM: u64 = 0xA0D1_7000;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    /// Overrides the spec's trial count.
    pub trials: Option<usize>,
    /// Multiplies every stored power ratio before the audit.
    pub inflate: f64,
    /// Overrides the spec's seed for the detector draws.
    pub seed: Option<u64>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { trials: None, inflate: 1.0, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub point: usize,
    pub sweep_value: f64,
    pub blocks: usize,
    pub method: String,
    pub scenario: usize,
    pub symbols: usize,
    pub epsilon: f64,
    pub sum_error: f64,
    pub ci: f64,
    pub required: f64,
    pub pass: bool,
    pub objective: f64,
    pub recomputed: f64,
    pub recompute_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub path: PathBuf,
    pub rows: Vec<AuditRow>,
    /// Solver runs that had failed and so carry no allocation.
    pub skipped: usize,
}

impl AuditSummary {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn inflate(chi: &[f64], factor: f64) -> Vec<f64> {
    chi.iter().map(|c| (c * factor).min(1.0 - 1e-9)).collect()
}

struct Replay {
    instance: ScenarioInstance,
    chi: Vec<f64>,
    obs: Observation,
    epsilon: f64,
}

fn run_replay(replay: &Replay, quad: &Quadrature) -> Result<(f64, f64, f64, bool)> {
    let report = covertness_audit(&replay.instance, &replay.chi, replay.obs, replay.epsilon, quad)?;
    Ok((report.estimate.sum_error, report.estimate.ci_half_width, report.required, report.pass))
}

/// Audits every allocation of the run in `run_dir` and writes `audit.csv` there.
pub fn audit_run(run_dir: &Path, options: &AuditOptions, quad: &Quadrature) -> Result<AuditSummary> {
    let spec_path = run_dir.join("spec.toml");
    if !spec_path.is_file() {
        return Err(CovertError::InvalidConfig(format!("no run found at {}", run_dir.display())));
    }
    let spec = ExperimentSpec::load(&spec_path)?;
    if !(options.inflate > 0.0 && options.inflate.is_finite()) {
        return Err(CovertError::InvalidConfig("inflation factor must be positive".into()));
    }
    let trials = options.trials.unwrap_or(spec.audit.trials);
    let seed = options.seed.unwrap_or(spec.seed) ^ AUDIT_STREAM;
    let rows_path = run_dir.join(scenarios_file(spec.figure));
    let mut out = Vec::new();
    let mut skipped = 0;
    match spec.figure.regime() {
        Regime::Bounds => {
            return Err(CovertError::InvalidConfig(format!("{} stores no allocations to audit", spec.figure.as_str())));
        }
        Regime::QuasiStatic => {
            for (i, row) in read_csv::<QsRow>(&rows_path)?.into_iter().enumerate() {
                let Some(objective) = row.objective.filter(|_| row.status == "ok") else {
                    skipped += 1;
                    continue;
                };
                let instance = sample_scenario(&spec.scenario_at(row.sweep_value), row.scenario_seed)?;
                let params = derive_quasi_static(&instance, row.epsilon)?;
                let chi = parse_values(&row.chi)?;
                let recomputed = sum_rate(&params, &chi, &parse_values(&row.gamma)?);
                let obs =
                    Observation { symbols: spec.audit.symbols, blocks: 1, trials, seed: scenario_seed(seed, i as u64) };
                let replay = Replay { instance, chi: inflate(&chi, options.inflate), obs, epsilon: row.epsilon };
                let (sum_error, ci, required, pass) = run_replay(&replay, quad)?;
                out.push(AuditRow {
                    point: row.point,
                    sweep_value: row.sweep_value,
                    blocks: 1,
                    method: row.method,
                    scenario: row.scenario,
                    symbols: obs.symbols,
                    epsilon: row.epsilon,
                    sum_error,
                    ci,
                    required,
                    pass,
                    objective,
                    recomputed,
                    recompute_error: (recomputed - objective).abs(),
                });
            }
        }
        Regime::Fast => {
            for (i, row) in read_csv::<FvRow>(&rows_path)?.into_iter().enumerate() {
                let (Some(objective), Some(tau)) = (row.objective, row.tau) else {
                    skipped += 1;
                    continue;
                };
                if row.status != "ok" {
                    skipped += 1;
                    continue;
                }
                let instance = sample_scenario(&spec.scenario_at(row.sweep_value), row.scenario_seed)?;
                let mut params = derive_fast_varying(&instance, row.block_length, row.blocks, row.epsilon)?;
                params.observed = spec.fast.observed;
                let chi = parse_values(&row.chi)?;
                let recomputed = ergodic_sum_rate(&chi, tau, &params);
                let obs = Observation {
                    symbols: params.observed_symbols(tau),
                    blocks: row.blocks,
                    trials,
                    seed: scenario_seed(seed, i as u64),
                };
                let replay = Replay { instance, chi: inflate(&chi, options.inflate), obs, epsilon: row.epsilon };
                let (sum_error, ci, required, pass) = run_replay(&replay, quad)?;
                out.push(AuditRow {
                    point: row.point,
                    sweep_value: row.sweep_value,
                    blocks: row.blocks,
                    method: row.method,
                    scenario: row.scenario,
                    symbols: obs.symbols,
                    epsilon: row.epsilon,
                    sum_error,
                    ci,
                    required,
                    pass,
                    objective,
                    recomputed,
                    recompute_error: (recomputed - objective).abs(),
                });
            }
        }
    }
    let path = run_dir.join("audit.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &out {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(AuditSummary { path, rows: out, skipped })
}
