//! Ergodic sum rate with pilot-based channel estimation: exhaustive pilot search
//! against alternating optimization.

use covert_core::covertness::ZetaCache;
use covert_core::fast_varying::{ao_solve, es_solve};
use covert_core::numerics::Quadrature;
use covert_core::scenario::{derive_fast_varying, sample_scenario, ScenarioConfig};

fn main() -> covert_core::Result<()> {
    let quad = Quadrature::default();
    let cache = ZetaCache::new();
    let config = ScenarioConfig { receivers: 4, ..ScenarioConfig::default() };
    let params = derive_fast_varying(&sample_scenario(&config, 5)?, 100, 100, 0.05)?;

    let es = es_solve(&params, &quad, &cache)?;
    let ao = ao_solve(&params, 0.5, 1e-6, 50, &quad, &cache)?;
    for r in [&es, &ao] {
        println!(
            "{}: {:.5} nats/symbol ({:.5} bits), {} pilots, power ratios {:?}",
            r.method.as_str(),
            r.objective,
            r.objective_bits(),
            r.pilots,
            r.chi.iter().map(|c| format!("{c:.2e}")).collect::<Vec<_>>()
        );
    }
    println!("\nAO rounds:");
    for p in &ao.trace {
        println!("  {:>2}  tau {:.4}  rate {:.6}", p.iteration, p.tau, p.objective);
    }
    Ok(())
}
