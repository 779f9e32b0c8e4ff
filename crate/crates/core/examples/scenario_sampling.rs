//! Samples a default scenario and prints the constants each channel model uses.

use covert_core::scenario::{derive_fast_varying, derive_quasi_static, sample_scenario, ScenarioConfig};

fn main() -> covert_core::Result<()> {
    let config = ScenarioConfig { receivers: 3, ..ScenarioConfig::default() };
    let instance = sample_scenario(&config, 7)?;
    println!("receiver  x [m]     y [m]    |h|^2    jamming/noise at adversary");
    for (k, p) in instance.receivers.iter().enumerate() {
        println!("{k:>8}  {:7.2}  {:7.2}  {:7.3}  {:.3e}", p[0], p[1], instance.h_norm_sq[k], instance.q_norm[k]);
    }

    let qs = derive_quasi_static(&instance, 0.005)?;
    println!("\nquasi-static: a = {:?}\n              b = {:?}", qs.a, qs.b);

    let fv = derive_fast_varying(&instance, 100, 100, 0.05)?;
    println!("\nfast-varying: beamforming gain {:.4}, residual {:.4}", fv.g_const, fv.e_const);
    println!("              KL budget per block {:.3e}", fv.kl_budget());
    Ok(())
}
