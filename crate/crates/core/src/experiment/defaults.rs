//! The default parameter table.

use std::fmt::Write;

use super::spec::{default_scenarios, AuditSettings, FvSettings, QsSettings, TvSettings, FAST_RECEIVERS};
use crate::numerics::DEFAULT_QUAD_ORDER;
use crate::scenario::{PerBand, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct DefaultRow {
    pub key: &'static str,
    pub description: &'static str,
    pub value: String,
    pub unit: &'static str,
}

fn uniform(v: &PerBand) -> String {
    match v {
        PerBand::Uniform(x) => x.to_string(),
        PerBand::Bands(xs) => format!("{xs:?}"),
    }
}

/// Defaults used when a spec leaves a key out.
pub fn list_defaults() -> Vec<DefaultRow> {
    let s = ScenarioConfig::default();
    let qs = QsSettings::default();
    let fv = FvSettings::default();
    let tv = TvSettings::default();
    let audit = AuditSettings::default();
    let row = |key, description, value: String, unit| DefaultRow { key, description, value, unit };
    vec![
        row("scenario.d_adversary", "transmitter to adversary distance", s.d_adversary.to_string(), "m"),
        row("scenario.d_jammer", "transmitter to jammer distance", s.d_jammer.to_string(), "m"),
        row("scenario.d_receivers", "transmitter to receiver disc center", s.d_receivers.to_string(), "m"),
        row("scenario.disc_radius", "receiver disc radius", s.disc_radius.to_string(), "m"),
        row("scenario.path_loss_exponent", "path-loss exponent", s.path_loss_exponent.to_string(), ""),
        row("scenario.noise_adversary_dbm", "adversary noise power", uniform(&s.noise_adversary_dbm), "dBm"),
        row("scenario.noise_receiver_dbm", "receiver noise power", s.noise_receiver_dbm.to_string(), "dBm"),
        row("scenario.noise_transmitter_dbm", "transmitter noise power", s.noise_transmitter_dbm.to_string(), "dBm"),
        row("scenario.pilot_power_dbm", "receiver pilot power", s.pilot_power_dbm.to_string(), "dBm"),
        row("scenario.jamming_power_dbm", "jamming power per band", uniform(&s.jamming_power_dbm), "dBm"),
        row("scenario.antennas", "transmit antennas", s.antennas.to_string(), ""),
        row("scenario.receivers", "receivers, quasi-static figures", s.receivers.to_string(), ""),
        row("quasi_static.epsilon", "covertness level, quasi-static", qs.epsilon.to_string(), ""),
        row("quasi_static.delta", "polyblock optimality gap", qs.delta.to_string(), "nats"),
        row("quasi_static.sca_tol", "SCA relative stopping change", qs.sca_tol.to_string(), ""),
        row("fast.n", "block length", fv.n.to_string(), "symbols"),
        row("fast.l", "blocks observed by the adversary", fv.l.to_string(), ""),
        row("fast.epsilon", "covertness level, fast-varying", fv.epsilon.to_string(), ""),
        row("scenario.receivers", "receivers, fast-varying figures", FAST_RECEIVERS.to_string(), ""),
        row("fast.tau0", "initial pilot fraction for AO", fv.tau0.to_string(), ""),
        row("fast.tol", "AO relative stopping change", fv.tol.to_string(), ""),
        row("scenarios_per_point", "scenarios averaged per sweep point", default_scenarios().to_string(), ""),
        row("tv.samples", "Monte-Carlo samples per total-variation point", tv.samples.to_string(), ""),
        row("audit.trials", "detector trials per audited allocation", audit.trials.to_string(), ""),
        row("audit.symbols", "adversary symbols, quasi-static audit", audit.symbols.to_string(), ""),
        row("quad_order", "Gauss-Laguerre order", DEFAULT_QUAD_ORDER.to_string(), ""),
    ]
}

/// Fixed-width text rendering of the defaults.
pub fn format_defaults(rows: &[DefaultRow]) -> String {
    let key_w = rows.iter().map(|r| r.key.len()).max().unwrap_or(0);
    let desc_w = rows.iter().map(|r| r.description.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        let line = format!("{:key_w$}  {:desc_w$}  {} {}", r.key, r.description, r.value, r.unit);
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}
