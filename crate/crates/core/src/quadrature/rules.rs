//! Collapsed-coordinate Gauss rules on the standard simplex.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

/// Tensor rule on the standard `d`-simplex: barycentric points and weights
/// summing to `1/d!`.
#[derive(Debug)]
pub struct SimplexRule {
    pub dim: usize,
    pub barycentric: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    fn build(dim: usize, order: usize) -> Self {
        if dim == 0 {
            return Self {
                dim,
                barycentric: vec![vec![1.0]],
                weights: vec![1.0],
            };
        }
        // Legendre nodes with the Jacobian factor (1 - s_k)^(d - k) folded into
        // the weights; the crate's Gauss–Jacobi rule has wrong moments for
        // alpha != beta in 0.3.2.
        let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
        let lines: Vec<Vec<(f64, f64)>> = (1..=dim)
            .map(|k| {
                let alpha = (dim - k) as i32;
                rule.as_node_weight_pairs()
                    .iter()
                    .map(|&(x, w)| {
                        let s = (1.0 + x) / 2.0;
                        (s, 0.5 * w * (1.0 - s).powi(alpha))
                    })
                    .collect()
            })
            .collect();
        let mut barycentric = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; dim];
        loop {
            let mut lam = vec![0.0; dim + 1];
            let mut rest = 1.0;
            let mut w = 1.0;
            for k in 0..dim {
                let (s, wk) = lines[k][idx[k]];
                lam[k + 1] = rest * s;
                rest *= 1.0 - s;
                w *= wk;
            }
            lam[0] = rest;
            barycentric.push(lam);
            weights.push(w);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < lines[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == dim {
                    return Self {
                        dim,
                        barycentric,
                        weights,
                    };
                }
            }
        }
    }

    /// Shared rule for `(dim, order)`, built on first use.
    pub fn get(dim: usize, order: usize) -> Arc<SimplexRule> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SimplexRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry((dim, order))
            .or_insert_with(|| Arc::new(SimplexRule::build(dim, order)))
            .clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn weights_sum_to_reference_volume() {
        for d in 0..=4 {
            let r = SimplexRule::get(d, 5);
            let s: f64 = r.weights.iter().sum();
            assert!((s * fact(d) - 1.0).abs() < 1e-13, "d = {d}");
        }
    }

    #[test]
    fn monomial_moments_are_exact() {
        // ∫_Δ λ^α = α! / (d + |α|)!  (Dirichlet integral).
        let r = SimplexRule::get(2, 4);
        let approx: f64 = r
            .barycentric
            .iter()
            .zip(&r.weights)
            .map(|(l, w)| w * l[0].powi(2) * l[1] * l[2].powi(3))
            .sum();
        let exact = fact(2) * fact(1) * fact(3) / fact(2 + 6);
        assert!((approx / exact - 1.0).abs() < 1e-13, "{approx} {exact}");
        let r = SimplexRule::get(3, 4);
        let approx: f64 = r
            .barycentric
            .iter()
            .zip(&r.weights)
            .map(|(l, w)| w * l[0] * l[3].powi(2))
            .sum();
        let exact = fact(1) * fact(2) / fact(3 + 3);
        assert!((approx / exact - 1.0).abs() < 1e-13, "{approx} {exact}");
    }
}
