//! Runs a small jamming-power sweep into a temporary directory, then replays the
//! allocations through the adversary's detector.

use covert_core::experiment::{
    audit_run, read_csv, run_experiment, AuditOptions, ExperimentSpec, FigureId, SummaryRow,
};
use covert_core::numerics::Quadrature;

fn main() -> covert_core::Result<()> {
    let quad = Quadrature::default();
    let dir = std::env::temp_dir().join("covert_sweep_example");
    let mut spec = ExperimentSpec::new(FigureId::RateVsJamming, vec![15.0, 25.0, 35.0]);
    spec.scenarios_per_point = 3;
    spec.output_dir = dir.clone();

    let summary = run_experiment(&spec, &quad)?;
    let rows: Vec<SummaryRow> = read_csv(&dir.join("fig4_rate_vs_Q.csv"))?;
    for r in rows {
        println!("Q = {:>4} dBm  {:>3}  {:.4} nats", r.sweep_value, r.method, r.mean_objective.unwrap_or(f64::NAN));
    }

    let audit = audit_run(&summary.dir, &AuditOptions { trials: Some(20_000), ..AuditOptions::default() }, &quad)?;
    let passed = audit.rows.iter().filter(|r| r.pass).count();
    println!("{passed}/{} allocations stay covert; results in {}", audit.rows.len(), dir.display());
    Ok(())
}
