//! Gauss–Jacobi rules via Golub–Welsch.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on `[-1, 1]` for the weight `(1 − x)^α (1 + x)^β`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl GaussJacobi {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Self {
        assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
        let ab = alpha + beta;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let k = i as f64;
            jac[(i, i)] = if i == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
            };
            if i + 1 < n {
                let m = k + 1.0;
                let b = if i == 0 {
                    4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    let s = 2.0 * m + ab;
                    4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
                };
                jac[(i, i + 1)] = b.sqrt();
                jac[(i + 1, i)] = b.sqrt();
            }
        }
        let mu0 =
            ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
                - ln_gamma(ab + 2.0))
            .exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        GaussJacobi {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            alpha,
            beta,
        }
    }

    /// Shared rule from a process-wide cache.
    pub fn cached(n: usize, alpha: f64, beta: f64) -> Arc<GaussJacobi> {
        type Key = (usize, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<GaussJacobi>>>> = OnceLock::new();
        let key = (n, alpha.to_bits(), beta.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&key) {
            return rule.clone();
        }
        let rule = Arc::new(GaussJacobi::new(n, alpha, beta));
        cache.lock().unwrap().insert(key, rule.clone());
        rule
    }

    /// `∫_a^b (b − x)^α (x − a)^β f(x, x − a, b − x) dx`.
    pub fn integrate<F: Fn(f64, f64, f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let scale = half.powf(self.alpha + self.beta + 1.0);
        let mut sum = 0.0;
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let dl = half * (1.0 + z);
            let dr = half * (1.0 - z);
            sum += w * f(a + dl, dl, dr);
        }
        scale * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_limit() {
        let r = GaussJacobi::new(5, 0.0, 0.0);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x4: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert!((x4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn singular_weight_moment() {
        // ∫₀^1 x^{-0.7} (1 − x)^{0.3} · x² dx = B(2.3, 1.3)
        let r = GaussJacobi::new(12, 0.3, -0.7);
        let v = r.integrate(|x, _, _| x * x, 0.0, 1.0);
        let exact = (ln_gamma(2.3) + ln_gamma(1.3) - ln_gamma(3.6)).exp();
        assert!((v - exact).abs() < 1e-13 * exact, "{v} {exact}");
    }

    #[test]
    fn cache_returns_same_rule() {
        let a = GaussJacobi::cached(8, -0.25, 0.0);
        let b = GaussJacobi::cached(8, -0.25, 0.0);
        assert!(Arc::ptr_eq(&a, &b));
    }
}
