//! Effective sum rate of a quasi-static scenario: global polyblock search against the
//! convex-approximation method.

use std::time::Instant;

use covert_core::quasi_static::{poa_solve, sca_initial_state, sca_solve};
use covert_core::scenario::{derive_quasi_static, sample_scenario, ScenarioConfig};

fn main() -> covert_core::Result<()> {
    let config = ScenarioConfig { receivers: 3, ..ScenarioConfig::default() };
    let params = derive_quasi_static(&sample_scenario(&config, 42)?, 0.005)?;

    let start = Instant::now();
    let poa = poa_solve(&params, 1e-3, 200_000)?;
    println!("polyblock: {:.5} nats ({} iterations, {:.2?})", poa.objective, poa.trace.len() - 1, start.elapsed());

    let start = Instant::now();
    let sca = sca_solve(&params, &sca_initial_state(&params)?, 1e-6, 100)?;
    println!("SCA:       {:.5} nats ({} iterations, {:.2?})", sca.objective, sca.trace.len() - 1, start.elapsed());
    for (k, (c, g)) in sca.chi.iter().zip(&sca.gamma).enumerate() {
        println!("  receiver {k}: power ratio {c:.3e}, threshold {g:.4}");
    }
    println!("SCA reaches {:.2}% of the global optimum", 100.0 * sca.objective / poa.objective);
    Ok(())
}
