//! Quadrature and root-finding building blocks.

pub mod kronrod;
pub mod laguerre;
pub mod root;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use kronrod::{integrate, integrate_pieces, Integral};
pub use laguerre::QuadratureRule;
pub use root::{bisect, bisect_log, expand_upper};

/// Default Gauss–Laguerre order.
pub const DEFAULT_QUAD_ORDER: usize = 128;

/// Shared quadrature settings plus a cache of Laguerre rules.
///
/// Two orders are kept per weight exponent: the configured order and half of
/// it. Disagreement between them sends the caller to the adaptive fallback.
#[derive(Debug)]
pub struct Quadrature {
    order: usize,
    rules: Mutex<HashMap<(usize, u64), Arc<QuadratureRule>>>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(DEFAULT_QUAD_ORDER)
    }
}

impl Quadrature {
    pub fn new(order: usize) -> Self {
        assert!(order >= 8, "quadrature order must be at least 8");
        Quadrature { order, rules: Mutex::new(HashMap::new()) }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Rule of the configured order for weight `x^α e^{-x}`.
    pub fn rule(&self, alpha: f64) -> Arc<QuadratureRule> {
        self.rule_of_order(self.order, alpha)
    }

    /// Rule of half the configured order, used for the agreement check.
    pub fn coarse_rule(&self, alpha: f64) -> Arc<QuadratureRule> {
        self.rule_of_order(self.order / 2, alpha)
    }

    fn rule_of_order(&self, order: usize, alpha: f64) -> Arc<QuadratureRule> {
        let key = (order, alpha.to_bits());
        if let Some(rule) = self.rules.lock().expect("rule cache poisoned").get(&key) {
            return Arc::clone(rule);
        }
        // Built outside the lock; a duplicate build on a race is harmless.
        let rule = Arc::new(QuadratureRule::gauss_laguerre(order, alpha));
        self.rules.lock().expect("rule cache poisoned").entry(key).or_insert(rule).clone()
    }
}

/// Relative disagreement `|a - b| / max(|a|, |b|)` with 0/0 treated as agreement.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
