//! TOML experiment descriptions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CovertError, Result};
use crate::fast_varying::FvMethod;
use crate::quasi_static::QsMethod;
use crate::scenario::{ObservedSymbols, PerBand, ScenarioConfig};

/// Receiver count of fast-varying figures when the spec does not set one.
pub const FAST_RECEIVERS: usize = 4;

/// Which figure a run reproduces; also fixes what the sweep values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureId {
    /// Sweep: common power ratio of every band.
    #[serde(rename = "fig2_tv_bounds")]
    TvBounds,
    /// Sweep: receiver count.
    #[serde(rename = "fig3_sca_convergence")]
    ScaConvergence,
    /// Sweep: jamming power, dBm.
    #[serde(rename = "fig4_rate_vs_Q", alias = "fig4_rate_vs_q")]
    RateVsJamming,
    /// Sweep: transmit antennas.
    #[serde(rename = "fig5_rate_vs_M", alias = "fig5_rate_vs_m")]
    RateVsAntennas,
    /// Sweep: receiver count.
    #[serde(rename = "fig6_ao_convergence")]
    AoConvergence,
    /// Sweep: pilot power, dBm.
    #[serde(rename = "fig7_rate_vs_PR", alias = "fig7_rate_vs_pr")]
    RateVsPilotPower,
    /// Sweep: jamming power, dBm.
    #[serde(rename = "fig8_rate_vs_Q_fast", alias = "fig8_rate_vs_q_fast")]
    FastRateVsJamming,
    /// Sweep: covertness level ε, one series per block count.
    #[serde(rename = "fig9_rate_vs_eps")]
    FastRateVsEpsilon,
}

/// Channel model a figure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Bounds,
    QuasiStatic,
    Fast,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::TvBounds,
        FigureId::ScaConvergence,
        FigureId::RateVsJamming,
        FigureId::RateVsAntennas,
        FigureId::AoConvergence,
        FigureId::RateVsPilotPower,
        FigureId::FastRateVsJamming,
        FigureId::FastRateVsEpsilon,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::TvBounds => "fig2_tv_bounds",
            FigureId::ScaConvergence => "fig3_sca_convergence",
            FigureId::RateVsJamming => "fig4_rate_vs_Q",
            FigureId::RateVsAntennas => "fig5_rate_vs_M",
            FigureId::AoConvergence => "fig6_ao_convergence",
            FigureId::RateVsPilotPower => "fig7_rate_vs_PR",
            FigureId::FastRateVsJamming => "fig8_rate_vs_Q_fast",
            FigureId::FastRateVsEpsilon => "fig9_rate_vs_eps",
        }
    }

    pub fn regime(&self) -> Regime {
        match self {
            FigureId::TvBounds => Regime::Bounds,
            FigureId::ScaConvergence | FigureId::RateVsJamming | FigureId::RateVsAntennas => Regime::QuasiStatic,
            _ => Regime::Fast,
        }
    }

    /// Figures that plot solver iterations rather than a swept parameter.
    pub fn is_convergence(&self) -> bool {
        matches!(self, FigureId::ScaConvergence | FigureId::AoConvergence)
    }

    /// Column header for the sweep value.
    pub fn sweep_label(&self) -> &'static str {
        match self {
            FigureId::TvBounds => "chi",
            FigureId::ScaConvergence | FigureId::AoConvergence => "receivers",
            FigureId::RateVsJamming | FigureId::FastRateVsJamming => "jamming_dbm",
            FigureId::RateVsAntennas => "antennas",
            FigureId::RateVsPilotPower => "pilot_dbm",
            FigureId::FastRateVsEpsilon => "epsilon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsSettings {
    pub epsilon: f64,
    pub methods: Vec<QsMethod>,
    /// Optimality gap at which the polyblock search stops.
    pub delta: f64,
    pub max_iter: usize,
    pub sca_tol: f64,
    pub sca_max_iter: usize,
}

impl Default for QsSettings {
    fn default() -> Self {
        QsSettings {
            epsilon: 0.005,
            methods: vec![QsMethod::Poa, QsMethod::Sca],
            delta: 1e-3,
            max_iter: 200_000,
            sca_tol: 1e-6,
            sca_max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvSettings {
    /// Block length in symbols.
    pub n: usize,
    /// Blocks observed by the adversary.
    pub l: usize,
    pub epsilon: f64,
    pub methods: Vec<FvMethod>,
    pub tau0: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub observed: ObservedSymbols,
    /// Block counts plotted as separate series in the ε sweep.
    pub blocks: Vec<usize>,
    /// Fixed `N·L` in the ε sweep; `N` follows from each block count.
    pub symbols_times_blocks: usize,
}

impl Default for FvSettings {
    fn default() -> Self {
        FvSettings {
            n: 100,
            l: 100,
            epsilon: 0.05,
            methods: vec![FvMethod::Es, FvMethod::Ao],
            tau0: 0.5,
            tol: 1e-6,
            max_iter: 50,
            observed: ObservedSymbols::DataPhase,
            blocks: vec![15, 30, 60],
            symbols_times_blocks: 1500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvSettings {
    /// Monte-Carlo samples per point for the product-law total variation.
    pub samples: usize,
    pub receivers: usize,
}

impl Default for TvSettings {
    fn default() -> Self {
        TvSettings { samples: 1_000_000, receivers: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub trials: usize,
    /// Symbols the adversary sees for quasi-static allocations.
    pub symbols: usize,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings { trials: 100_000, symbols: 500 }
    }
}

/// A complete experiment: figure, sweep, averaging and solver settings.
///
/// `scenario.seed` is not used: the `i`-th scenario of every sweep point is drawn from
/// `scenario_seed(seed, i)`, so all points share the same placements and channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub figure: FigureId,
    pub sweep: Vec<f64>,
    #[serde(default = "default_scenarios")]
    pub scenarios_per_point: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub quasi_static: QsSettings,
    #[serde(default)]
    pub fast: FvSettings,
    #[serde(default)]
    pub tv: TvSettings,
    #[serde(default)]
    pub audit: AuditSettings,
}

pub(crate) fn default_scenarios() -> usize {
    20
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentSpec {
    /// Spec with defaults for `figure` and the given sweep.
    pub fn new(figure: FigureId, sweep: Vec<f64>) -> Self {
        let mut scenario = ScenarioConfig::default();
        if figure.regime() == Regime::Fast {
            scenario.receivers = FAST_RECEIVERS;
        }
        ExperimentSpec {
            figure,
            sweep,
            scenarios_per_point: default_scenarios(),
            seed: default_seed(),
            output_dir: default_output(),
            scenario,
            quasi_static: QsSettings::default(),
            fast: FvSettings::default(),
            tv: TvSettings::default(),
            audit: AuditSettings::default(),
        }
    }

    /// Parses and validates. Fast-varying figures default to four receivers when the
    /// scenario table leaves the count out.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: toml::Table = toml::from_str(text)?;
        let receivers_given =
            raw.get("scenario").and_then(|s| s.as_table()).is_some_and(|s| s.contains_key("receivers"));
        let mut spec: ExperimentSpec = toml::from_str(text)?;
        if !receivers_given && spec.figure.regime() == Regime::Fast {
            spec.scenario.receivers = FAST_RECEIVERS;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CovertError::InvalidConfig(format!("cannot serialize spec: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CovertError::InvalidConfig(msg));
        if self.sweep.is_empty() {
            return bad("sweep must list at least one value".into());
        }
        if self.scenarios_per_point == 0 {
            return bad("scenarios_per_point must be at least 1".into());
        }
        for &v in &self.sweep {
            let ok = match self.figure {
                FigureId::TvBounds => (0.0..1.0).contains(&v),
                FigureId::ScaConvergence | FigureId::AoConvergence | FigureId::RateVsAntennas => {
                    v >= 1.0 && v.fract() == 0.0 && v <= 4096.0
                }
                FigureId::FastRateVsEpsilon => v > 0.0 && v < 1.0,
                _ => v.is_finite(),
            };
            if !ok {
                return bad(format!("sweep value {v} is not valid for {}", self.figure.as_str()));
            }
        }
        let qs = &self.quasi_static;
        if !(qs.epsilon > 0.0 && qs.epsilon < 1.0) {
            return bad(format!("quasi_static.epsilon must lie in (0, 1), got {}", qs.epsilon));
        }
        if !(qs.delta > 0.0) || !(qs.sca_tol >= 0.0) {
            return bad("quasi_static.delta must be positive and sca_tol nonnegative".into());
        }
        let fv = &self.fast;
        if fv.n < 2 || fv.l == 0 {
            return bad("fast.n must be at least 2 and fast.l at least 1".into());
        }
        if !(fv.epsilon > 0.0 && fv.epsilon < 1.0) || !(fv.tau0 > 0.0 && fv.tau0 < 1.0) || !(fv.tol >= 0.0) {
            return bad("fast.epsilon and fast.tau0 must lie in (0, 1), fast.tol nonnegative".into());
        }
        match self.figure.regime() {
            Regime::QuasiStatic if qs.methods.is_empty() => return bad("quasi_static.methods is empty".into()),
            Regime::Fast if fv.methods.is_empty() => return bad("fast.methods is empty".into()),
            _ => {}
        }
        if self.figure == FigureId::FastRateVsEpsilon {
            if fv.blocks.is_empty() {
                return bad("fast.blocks is empty".into());
            }
            for &l in &fv.blocks {
                if l == 0 || !fv.symbols_times_blocks.is_multiple_of(l) || fv.symbols_times_blocks / l < 2 {
                    return bad(format!(
                        "block count {l} does not divide {} into blocks of at least 2",
                        fv.symbols_times_blocks
                    ));
                }
            }
        }
        if self.figure == FigureId::TvBounds && (self.tv.receivers == 0 || self.tv.samples < 2) {
            return bad("tv.receivers must be positive and tv.samples at least 2".into());
        }
        if self.audit.trials == 0 || self.audit.symbols == 0 {
            return bad("audit.trials and audit.symbols must be positive".into());
        }
        if self.figure.regime() != Regime::Bounds {
            self.scenario_at(self.sweep[0]).validate()?;
        }
        Ok(())
    }

    /// Scenario configuration at one sweep value.
    pub fn scenario_at(&self, value: f64) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        match self.figure {
            FigureId::ScaConvergence | FigureId::AoConvergence => cfg.receivers = value as usize,
            FigureId::RateVsJamming | FigureId::FastRateVsJamming => cfg.jamming_power_dbm = PerBand::Uniform(value),
            FigureId::RateVsAntennas => cfg.antennas = value as usize,
            FigureId::RateVsPilotPower => cfg.pilot_power_dbm = value,
            FigureId::TvBounds | FigureId::FastRateVsEpsilon => {}
        }
        cfg
    }

    /// `(N, L, ε)` series evaluated at one sweep value of a fast-varying figure.
    pub fn fast_series(&self, value: f64) -> Vec<(usize, usize, f64)> {
        let fv = &self.fast;
        match self.figure {
            FigureId::FastRateVsEpsilon => fv.blocks.iter().map(|&l| (fv.symbols_times_blocks / l, l, value)).collect(),
            _ => vec![(fv.n, fv.l, fv.epsilon)],
        }
    }
}
