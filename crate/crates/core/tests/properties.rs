use proptest::prelude::*;

use covert_core::covertness::{eta, hellinger_tv_bound, pinsker_tv_bound, tv_upper_bound, ZetaCache};
use covert_core::experiment::{join_values, parse_values};
use covert_core::fast_varying::{chi_given_tau, ergodic_sum_rate, zeta_values};
use covert_core::numerics::Quadrature;
use covert_core::quasi_static::{poa_solve, single_receiver_gamma, single_receiver_rate, sum_rate};
use covert_core::scenario::{
    beamforming_gain, derive_fast_varying, derive_quasi_static, sample_scenario, QuasiStaticParams, ScenarioConfig,
};

fn heavy() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

proptest! {
    #[test]
    fn eta_is_concave_increasing_and_below_identity(x in 1e-6..0.999f64, h in 1e-5..1e-3f64) {
        prop_assume!(x - h > 0.0 && x + h < 1.0);
        let (lo, mid, hi) = (eta(x - h).unwrap(), eta(x).unwrap(), eta(x + h).unwrap());
        prop_assert!(mid <= x);
        prop_assert!(lo <= mid && mid <= hi);
        prop_assert!(lo + hi - 2.0 * mid <= 1e-12);
    }

    #[test]
    fn bounds_ignore_receiver_order(chis in prop::collection::vec(0.0..0.95f64, 1..6), rot in 0usize..6) {
        let mut turned = chis.clone();
        let n = turned.len();
        turned.rotate_left(rot % n);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        prop_assert!(close(tv_upper_bound(&chis).unwrap(), tv_upper_bound(&turned).unwrap()));
        prop_assert!(close(pinsker_tv_bound(&chis).unwrap(), pinsker_tv_bound(&turned).unwrap()));
        prop_assert!(close(hellinger_tv_bound(&chis).unwrap(), hellinger_tv_bound(&turned).unwrap()));
    }

    #[test]
    fn bounds_grow_with_each_ratio(chis in prop::collection::vec(0.0..0.9f64, 1..5), k in 0usize..5, bump in 1e-4..0.05f64) {
        let k = k % chis.len();
        let mut more = chis.clone();
        more[k] += bump;
        prop_assert!(tv_upper_bound(&more).unwrap() >= tv_upper_bound(&chis).unwrap());
        prop_assert!(pinsker_tv_bound(&more).unwrap() >= pinsker_tv_bound(&chis).unwrap());
        prop_assert!(hellinger_tv_bound(&more).unwrap() >= hellinger_tv_bound(&chis).unwrap() - 1e-15);
        prop_assert!(hellinger_tv_bound(&more).unwrap() <= 1.0);
    }

    #[test]
    fn beamforming_split_sums_to_antennas(m in 1usize..400) {
        let g = beamforming_gain(m);
        let config = ScenarioConfig { antennas: m, receivers: 1, ..ScenarioConfig::default() };
        let params = derive_fast_varying(&sample_scenario(&config, 1).unwrap(), 10, 1, 0.1).unwrap();
        prop_assert!(g > 0.0 && g <= m as f64);
        prop_assert!((params.g_const + params.e_const - m as f64).abs() <= 1e-12 * m as f64);
    }

    #[test]
    fn receivers_stay_in_disc(seed in any::<u64>(), k in 1usize..8) {
        let config = ScenarioConfig { receivers: k, ..ScenarioConfig::default() };
        let a = sample_scenario(&config, seed).unwrap();
        prop_assert_eq!(&a, &sample_scenario(&config, seed).unwrap());
        for p in &a.receivers {
            let r = ((p[0] - config.d_receivers).powi(2) + p[1].powi(2)).sqrt();
            prop_assert!(r <= config.disc_radius * (1.0 + 1e-12));
        }
    }

    #[test]
    fn value_lists_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 0..8)) {
        prop_assert_eq!(parse_values(&join_values(&values)).unwrap(), values);
    }

    #[test]
    fn single_receiver_threshold_is_optimal(a in 0.5..1e4f64, b in 1.01..5.0f64, chi in 1e-4..0.2f64, s in 0.2..3.0f64) {
        let gamma = single_receiver_gamma(a, b, chi).unwrap();
        let (best, g2) = single_receiver_rate(a, b, chi).unwrap();
        prop_assert!((gamma - g2).abs() <= 1e-12 * gamma.max(1.0));
        let params = QuasiStaticParams::new(vec![a], vec![b], 0.5).unwrap();
        prop_assert!(sum_rate(&params, &[chi], &[gamma * s]) <= best + 1e-12 * best.max(1.0));
    }
}

proptest! {
    #![proptest_config(heavy())]

    #[test]
    fn power_step_spends_budget_exactly(seed in 0u64..1000, tau in 0.02..0.9f64, eps in 0.01..0.3f64) {
        let quad = Quadrature::default();
        let config = ScenarioConfig { receivers: 3, ..ScenarioConfig::default() };
        let params = derive_fast_varying(&sample_scenario(&config, seed).unwrap(), 50, 20, eps).unwrap();
        let zetas = zeta_values(&params, tau, &quad, &ZetaCache::new()).unwrap();
        let budget = params.kl_budget();
        let (chi, lambda) = chi_given_tau(tau, &params, &zetas, budget).unwrap();
        let used: f64 = chi.iter().zip(&zetas).map(|(c, z)| 0.5 * z * c * c).sum();
        prop_assert!((used - budget).abs() <= 1e-10 * budget);

        let (chi_more, lambda_more) = chi_given_tau(tau, &params, &zetas, 2.0 * budget).unwrap();
        prop_assert!(lambda_more < lambda);
        prop_assert!(chi_more.iter().zip(&chi).all(|(a, b)| a >= b));
        prop_assert!(ergodic_sum_rate(&chi_more, tau, &params) >= ergodic_sum_rate(&chi, tau, &params));
    }

    #[test]
    fn polyblock_ignores_receiver_order(seed in 0u64..1000) {
        let config = ScenarioConfig { receivers: 2, ..ScenarioConfig::default() };
        let params = derive_quasi_static(&sample_scenario(&config, seed).unwrap(), 0.005).unwrap();
        let swapped = QuasiStaticParams::new(
            params.a.iter().rev().copied().collect(),
            params.b.iter().rev().copied().collect(),
            params.epsilon,
        )
        .unwrap();
        let delta = 1e-4;
        let x = poa_solve(&params, delta, 100_000).unwrap();
        let y = poa_solve(&swapped, delta, 100_000).unwrap();
        prop_assert!((x.objective - y.objective).abs() <= delta);
        prop_assert!(x.constraint_slack >= -1e-12 && x.constraint_slack.abs() <= 1e-10);
    }
}
