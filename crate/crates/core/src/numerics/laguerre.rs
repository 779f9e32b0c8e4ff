//! Generalized Gauss–Laguerre rules built by the Golub–Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for `∫₀^∞ f(x) x^α e^{-x} / Γ(α+1) dx ≈ Σ w_i f(x_i)`.
///
/// Weights are normalized against the Gamma(α+1, 1) density, so they sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl QuadratureRule {
    /// Builds the `order`-point rule for the weight `x^α e^{-x}`.
    pub fn gauss_laguerre(order: usize, alpha: f64) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        assert!(alpha > -1.0, "Laguerre exponent must exceed -1");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for i in 0..order {
            let fi = i as f64;
            jacobi[(i, i)] = 2.0 * fi + 1.0 + alpha;
            if i + 1 < order {
                let off = ((fi + 1.0) * (fi + 1.0 + alpha)).sqrt();
                jacobi[(i, i + 1)] = off;
                jacobi[(i + 1, i)] = off;
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|j| {
                let v0 = eig.eigenvectors[(0, j)];
                (eig.eigenvalues[j], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        QuadratureRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
            alpha,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Log of `Σ w_i exp(g(x_i))`, evaluated without overflow.
    pub fn log_integrate_exp<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w.ln() + g(x)).collect();
        let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return peak;
        }
        peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
    }
}
