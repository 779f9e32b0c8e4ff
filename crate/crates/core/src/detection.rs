//! Monte-Carlo model of the adversary: likelihood-ratio and energy detectors
//! run on per-band, per-block received energies.

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::covertness::{ln_psi, BandDistribution, Z95};
use crate::error::{domain, CovertError, Result};
use crate::numerics::Quadrature;
use crate::scenario::ScenarioInstance;

const SHARD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Lrt,
    Energy,
}

impl DetectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Lrt => "lrt",
            DetectorKind::Energy => "energy",
        }
    }
}

/// Empirical error rates of one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub p_fa: f64,
    pub p_md: f64,
    pub sum_error: f64,
    /// 95% half-width on `sum_error`.
    pub ci_half_width: f64,
    pub trials: usize,
    pub detector: DetectorKind,
    /// Decide "signal present" when the statistic exceeds this.
    pub threshold: f64,
}

/// Detector statistics collected under each hypothesis, one per trial.
#[derive(Debug, Clone)]
pub struct DetectionSamples {
    pub no_signal: Vec<f64>,
    pub signal: Vec<f64>,
    pub detector: DetectorKind,
}

impl DetectionSamples {
    /// Error rates when deciding "signal present" for statistics strictly above `threshold`.
    pub fn estimate_at(&self, threshold: f64) -> DetectionEstimate {
        let false_alarms = self.no_signal.iter().filter(|&&s| s > threshold).count();
        let misses = self.signal.iter().filter(|&&s| s <= threshold).count();
        estimate_from_counts(false_alarms, misses, self.no_signal.len(), self.detector, threshold)
    }

    /// Threshold minimizing the empirical sum error, found by sweeping the pooled sorted statistics.
    pub fn best_threshold(&self) -> f64 {
        let mut pooled: Vec<(f64, bool)> =
            self.no_signal.iter().map(|&s| (s, false)).chain(self.signal.iter().map(|&s| (s, true))).collect();
        pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Threshold below everything: every no-signal trial alarms, nothing is missed.
        let mut errors = self.no_signal.len() as i64;
        let mut best = (errors, f64::NEG_INFINITY);
        let mut i = 0;
        while i < pooled.len() {
            let value = pooled[i].0;
            while i < pooled.len() && pooled[i].0 == value {
                errors += if pooled[i].1 { 1 } else { -1 };
                i += 1;
            }
            if errors < best.0 {
                best = (errors, value);
            }
        }
        best.1
    }
}

fn estimate_from_counts(
    false_alarms: usize,
    misses: usize,
    trials: usize,
    detector: DetectorKind,
    threshold: f64,
) -> DetectionEstimate {
    let t = trials as f64;
    let p_fa = false_alarms as f64 / t;
    let p_md = misses as f64 / t;
    // Add-one smoothing keeps the half-width positive at zero or full counts.
    let var = |x: usize| {
        let p = (x as f64 + 1.0) / (t + 2.0);
        p * (1.0 - p) / t
    };
    DetectionEstimate {
        p_fa,
        p_md,
        sum_error: p_fa + p_md,
        ci_half_width: Z95 * (var(false_alarms) + var(misses)).sqrt(),
        trials,
        detector,
        threshold,
    }
}

/// Sum over bands and blocks of the per-band log-likelihood ratio.
///
/// `energies` holds one normalized energy per (block, band), block-major.
pub fn lrt_statistic(energies: &[f64], bands: &[BandDistribution], n: usize, quad: &Quadrature) -> Result<f64> {
    if bands.is_empty() || !energies.len().is_multiple_of(bands.len()) {
        return Err(CovertError::InvalidConfig(format!(
            "{} energies do not split into blocks of {} bands",
            energies.len(),
            bands.len()
        )));
    }
    let mut total = 0.0;
    for block in energies.chunks(bands.len()) {
        for (z, band) in block.iter().zip(bands) {
            if band.p_norm > 0.0 {
                total += ln_psi(band.p_norm, band.q_norm, *z, n, quad)?;
            }
        }
    }
    Ok(total)
}

/// Cubic interpolant of one band's `ln Ψ` on a uniform grid in `ln z`, checked against
/// direct evaluation when built. Energies off the grid fall back to direct evaluation.
#[derive(Debug, Clone)]
pub struct LnPsiTable {
    band: BandDistribution,
    symbols: usize,
    s_lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl LnPsiTable {
    const TOL: f64 = 1e-9;
    const FLOOR_TOL: f64 = 1e-7;

    pub fn build(band: &BandDistribution, symbols: usize, quad: &Quadrature) -> Result<Self> {
        let nf = symbols as f64;
        let s_lo = (ln_gamma(nf + 1.0) - 46.0) / nf;
        let s_hi = ((nf + 12.0 * nf.sqrt() + 40.0) * (1.0 + 45.0 * (band.q_norm + band.p_norm))).ln();
        let eval = |s: f64| ln_psi(band.p_norm, band.q_norm, s.exp(), symbols, quad);
        let mut nodes = 1024;
        let mut previous = f64::INFINITY;
        loop {
            let step = (s_hi - s_lo) / nodes as f64;
            let values = (0..=nodes).map(|i| eval(s_lo + step * i as f64)).collect::<Result<Vec<_>>>()?;
            let table = LnPsiTable { band: *band, symbols, s_lo, step, values };
            let mut worst = 0.0f64;
            for i in (1..nodes - 1).step_by(7) {
                let s = s_lo + step * (i as f64 + 0.5);
                let exact = eval(s)?;
                worst = worst.max((table.interpolate(s) - exact).abs() / (1.0 + exact.abs()));
            }
            debug!("ln psi table: {nodes} nodes, error {worst:e}");
            if worst <= Self::TOL {
                return Ok(table);
            }
            // Refinement that no longer helps has hit the accuracy of direct evaluation.
            if worst > 0.25 * previous && worst <= Self::FLOOR_TOL {
                return Ok(table);
            }
            if nodes >= 1 << 15 {
                warn!("ln psi table error {worst:e} with {nodes} nodes; using direct evaluation");
                return Ok(LnPsiTable { band: *band, symbols, s_lo, step, values: Vec::new() });
            }
            previous = worst;
            nodes *= 2;
        }
    }

    /// Four-point Lagrange interpolation; valid only strictly inside the grid.
    fn interpolate(&self, s: f64) -> f64 {
        let x = (s - self.s_lo) / self.step;
        let i = (x.floor() as usize).clamp(1, self.values.len() - 3);
        let t = x - i as f64;
        let [a, b, c, d] = [self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]];
        let (tp, tm, tm2) = (t + 1.0, t - 1.0, t - 2.0);
        (-a * t * tm * tm2 + d * tp * t * tm) / 6.0 + (b * tp * tm * tm2 - c * tp * t * tm2) / 2.0
    }

    pub fn eval(&self, z: f64, quad: &Quadrature) -> Result<f64> {
        if self.band.p_norm == 0.0 {
            return Ok(0.0);
        }
        let s = z.ln();
        let x = (s - self.s_lo) / self.step;
        if self.values.len() >= 4 && x >= 1.0 && x <= (self.values.len() - 3) as f64 {
            Ok(self.interpolate(s))
        } else {
            ln_psi(self.band.p_norm, self.band.q_norm, z, self.symbols, quad)
        }
    }
}

/// Draws the normalized block energy of one band. `signal` selects the hypothesis.
fn draw_energy(rng: &mut ChaCha12Rng, band: &BandDistribution, shape: &Gamma<f64>, signal: bool) -> f64 {
    let jam: f64 = Exp1.sample(rng);
    let mut power = 1.0 + band.q_norm * jam;
    if signal {
        let sig: f64 = Exp1.sample(rng);
        power += band.p_norm * sig;
    }
    power * shape.sample(rng)
}

fn check_bands(bands: &[BandDistribution]) -> Result<()> {
    if bands.is_empty() {
        return Err(CovertError::InvalidConfig("at least one band is required".into()));
    }
    for b in bands {
        let chi = b.chi();
        if !(b.q_norm > 0.0) {
            return Err(domain("simulate_detection", b.q_norm, "q > 0"));
        }
        if !(0.0..1.0).contains(&chi) {
            return Err(domain("simulate_detection", chi, "0 <= chi < 1"));
        }
    }
    Ok(())
}

/// Settings shared by every simulated trial.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    /// Symbols per block seen by the adversary.
    pub symbols: usize,
    /// Independent blocks pooled into one decision.
    pub blocks: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Simulates the detector statistic under both hypotheses.
///
/// Given the received power, the energy of `symbols` complex Gaussian samples is
/// Gamma-distributed, so it is drawn directly instead of materializing the samples.
pub fn simulate_statistics(
    bands: &[BandDistribution],
    obs: Observation,
    detector: DetectorKind,
    quad: &Quadrature,
) -> Result<DetectionSamples> {
    check_bands(bands)?;
    if obs.symbols == 0 || obs.blocks == 0 || obs.trials == 0 {
        return Err(CovertError::InvalidConfig("symbols, blocks and trials must be positive".into()));
    }
    let shape = Gamma::new(obs.symbols as f64, 1.0).map_err(|e| CovertError::InvalidConfig(e.to_string()))?;
    let tables = match detector {
        DetectorKind::Lrt => {
            bands.iter().map(|b| LnPsiTable::build(b, obs.symbols, quad)).collect::<Result<Vec<_>>>()?
        }
        DetectorKind::Energy => Vec::new(),
    };
    let shards = obs.trials.div_ceil(SHARD);
    let per_shard: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha12Rng::seed_from_u64(obs.seed);
            rng.set_stream(shard as u64);
            let count = SHARD.min(obs.trials - shard * SHARD);
            let mut h0 = Vec::with_capacity(count);
            let mut h1 = Vec::with_capacity(count);
            let mut energies = vec![0.0; bands.len() * obs.blocks];
            for _ in 0..count {
                for (signal, out) in [(false, &mut h0), (true, &mut h1)] {
                    for (i, z) in energies.iter_mut().enumerate() {
                        *z = draw_energy(&mut rng, &bands[i % bands.len()], &shape, signal);
                    }
                    let stat = match detector {
                        DetectorKind::Lrt => energies
                            .iter()
                            .enumerate()
                            .map(|(i, &z)| tables[i % tables.len()].eval(z, quad))
                            .sum::<Result<f64>>()?,
                        DetectorKind::Energy => energies.iter().sum(),
                    };
                    out.push(stat);
                }
            }
            Ok((h0, h1))
        })
        .collect();
    let mut samples = DetectionSamples {
        no_signal: Vec::with_capacity(obs.trials),
        signal: Vec::with_capacity(obs.trials),
        detector,
    };
    for shard in per_shard {
        let (h0, h1) = shard?;
        samples.no_signal.extend(h0);
        samples.signal.extend(h1);
    }
    Ok(samples)
}

/// Minimum sum error of the chosen detector: likelihood ratio against one for the
/// LRT, and the empirically best threshold for the energy detector.
pub fn simulate_bands(
    bands: &[BandDistribution],
    obs: Observation,
    detector: DetectorKind,
    quad: &Quadrature,
) -> Result<DetectionEstimate> {
    let samples = simulate_statistics(bands, obs, detector, quad)?;
    Ok(match detector {
        DetectorKind::Lrt => samples.estimate_at(0.0),
        DetectorKind::Energy => samples.estimate_at(samples.best_threshold()),
    })
}

pub fn simulate_detection(
    instance: &ScenarioInstance,
    chis: &[f64],
    obs: Observation,
    detector: DetectorKind,
    quad: &Quadrature,
) -> Result<DetectionEstimate> {
    if chis.len() != instance.receivers() {
        return Err(CovertError::InvalidConfig("one power ratio per receiver is required".into()));
    }
    simulate_bands(&instance.bands(chis), obs, detector, quad)
}

/// Outcome of checking an allocation against the adversary's best detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub estimate: DetectionEstimate,
    /// Required minimum sum error, `1 − ε`.
    pub required: f64,
    /// Sum error clears `1 − ε` once three half-widths of slack are allowed.
    pub pass: bool,
}

pub fn covertness_audit_bands(
    bands: &[BandDistribution],
    obs: Observation,
    epsilon: f64,
    quad: &Quadrature,
) -> Result<AuditReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("covertness_audit", epsilon, "(0, 1)"));
    }
    let estimate = simulate_bands(bands, obs, DetectorKind::Lrt, quad)?;
    let required = 1.0 - epsilon;
    Ok(AuditReport { estimate, required, pass: estimate.sum_error >= required - 3.0 * estimate.ci_half_width })
}

pub fn covertness_audit(
    instance: &ScenarioInstance,
    chis: &[f64],
    obs: Observation,
    epsilon: f64,
    quad: &Quadrature,
) -> Result<AuditReport> {
    if chis.len() != instance.receivers() {
        return Err(CovertError::InvalidConfig("one power ratio per receiver is required".into()));
    }
    covertness_audit_bands(&instance.bands(chis), obs, epsilon, quad)
}

/// FNV-1a over the bit patterns of a power-ratio vector.
pub fn chi_hash(chis: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for c in chis {
        for byte in c.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// One CSV row of detector output.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionRow {
    pub detector: &'static str,
    pub symbols: usize,
    pub blocks: usize,
    pub chi_hash: String,
    pub p_fa: f64,
    pub p_md: f64,
    pub sum_error: f64,
    pub ci: f64,
}

impl DetectionRow {
    pub fn new(estimate: &DetectionEstimate, obs: &Observation, chis: &[f64]) -> Self {
        DetectionRow {
            detector: estimate.detector.as_str(),
            symbols: obs.symbols,
            blocks: obs.blocks,
            chi_hash: chi_hash(chis),
            p_fa: estimate.p_fa,
            p_md: estimate.p_md,
            sum_error: estimate.sum_error,
            ci: estimate.ci_half_width,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(symbols: usize, blocks: usize, trials: usize, seed: u64) -> Observation {
        Observation { symbols, blocks, trials, seed }
    }

    #[test]
    fn silent_bands_give_zero_statistic() {
        let quad = Quadrature::default();
        let bands = [BandDistribution::new(0.0, 4.0), BandDistribution::new(0.0, 2.0)];
        assert_eq!(lrt_statistic(&[3.0, 50.0, 0.1, 7.0], &bands, 10, &quad).unwrap(), 0.0);
        assert!(lrt_statistic(&[1.0, 2.0, 3.0], &bands, 10, &quad).is_err());
    }

    #[test]
    fn statistic_saturates_at_high_energy() {
        let quad = Quadrature::default();
        let (p, q) = (0.4, 2.0);
        let bands = [BandDistribution::new(p, q)];
        let far = lrt_statistic(&[1e7], &bands, 3, &quad).unwrap();
        assert!((far - (q / (q - p)).ln()).abs() < 1e-3, "{far}");
    }

    #[test]
    fn statistic_increases_with_energy() {
        let quad = Quadrature::default();
        let bands = [BandDistribution::new(1.0, 4.0)];
        let mut prev = f64::NEG_INFINITY;
        for i in 0..60 {
            let z = 0.5 + 2.0 * i as f64;
            let s = lrt_statistic(&[z], &bands, 8, &quad).unwrap();
            assert!(s >= prev - 1e-12, "z={z}: {s} < {prev}");
            prev = s;
        }
    }

    #[test]
    fn identical_hypotheses_give_unit_sum_error() {
        let quad = Quadrature::default();
        let bands = [BandDistribution::new(0.0, 5.0); 2];
        let est = simulate_bands(&bands, obs(20, 2, 5000, 3), DetectorKind::Lrt, &quad).unwrap();
        assert_eq!(est.p_fa, 0.0);
        assert_eq!(est.p_md, 1.0);
        assert!((est.sum_error - 1.0).abs() <= est.ci_half_width);
        assert!(est.ci_half_width > 0.0);
    }

    #[test]
    fn best_threshold_handles_separated_samples() {
        let samples = DetectionSamples {
            no_signal: vec![0.0, 1.0, 2.0],
            signal: vec![5.0, 6.0, 7.0],
            detector: DetectorKind::Energy,
        };
        let t = samples.best_threshold();
        let est = samples.estimate_at(t);
        assert_eq!(est.sum_error, 0.0);
        assert_eq!(t, 2.0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let quad = Quadrature::default();
        let bands = [BandDistribution::new(0.5, 5.0)];
        let a = simulate_bands(&bands, obs(16, 1, 5000, 9), DetectorKind::Lrt, &quad).unwrap();
        let b = simulate_bands(&bands, obs(16, 1, 5000, 9), DetectorKind::Lrt, &quad).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vacuous_budget_always_passes() {
        let quad = Quadrature::default();
        let bands = [BandDistribution::new(4.0, 5.0)];
        let report = covertness_audit_bands(&bands, obs(50, 4, 2000, 1), 1.0 - 1e-9, &quad).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn tabulated_statistic_matches_direct() {
        let quad = Quadrature::default();
        for (p, q, n) in [(0.03, 300.0, 87), (2.0, 40.0, 500), (0.5, 1.0, 10)] {
            let band = BandDistribution::new(p, q);
            let table = LnPsiTable::build(&band, n, &quad).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(9);
            let shape = Gamma::new(n as f64, 1.0).unwrap();
            for i in 0..400 {
                let z = draw_energy(&mut rng, &band, &shape, i % 2 == 0);
                let direct = ln_psi(p, q, z, n, &quad).unwrap();
                let tabulated = table.eval(z, &quad).unwrap();
                assert!((direct - tabulated).abs() <= 1e-9 * (1.0 + direct.abs()), "{p} {q} {n} z={z}");
            }
        }
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(chi_hash(&[0.1, 0.2]), chi_hash(&[0.1, 0.2]));
        assert_ne!(chi_hash(&[0.1, 0.2]), chi_hash(&[0.2, 0.1]));
    }
}
