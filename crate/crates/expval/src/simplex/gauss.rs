//! One-dimensional Gauss rules for Beta weights, built by Golub-Welsch.
//!
//! `beta_rule(n, a, b)` returns nodes/weights on `[0, 1]` normalized so the
//! weighted sum approximates `E_{Beta(a,b)}[f]`; `(a, b) = (1, 1)` is the
//! Legendre rule in mean form. Rules are built in `f64` and cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

type RuleCache = Mutex<HashMap<(usize, u64, u64), Arc<Vec<(f64, f64)>>>>;

pub(crate) fn beta_rule(order: usize, a: f64, b: f64) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (order, a.to_bits(), b.to_bits());
    if let Some(rule) = cache.lock().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build(order, a, b));
    cache.lock().unwrap().insert(key, Arc::clone(&rule));
    rule
}

fn build(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1 && a > 0.0 && b > 0.0, "invalid Beta rule request");
    // Jacobi weight (1-x)^A (1+x)^B on [-1,1] under t = (1+x)/2
    let big_a = b - 1.0;
    let big_b = a - 1.0;
    let s = big_a + big_b;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jacobi[(k, k)] = if k == 0 {
            (big_b - big_a) / (s + 2.0)
        } else {
            (big_b * big_b - big_a * big_a) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        if k >= 1 {
            let beta_k = if k == 1 {
                4.0 * (1.0 + big_a) * (1.0 + big_b) / ((s + 2.0).powi(2) * (s + 3.0))
            } else {
                4.0 * kf * (kf + big_a) * (kf + big_b) * (kf + s)
                    / ((2.0 * kf + s).powi(2) * (2.0 * kf + s + 1.0) * (2.0 * kf + s - 1.0))
            };
            let off = beta_k.sqrt();
            jacobi[(k, k - 1)] = off;
            jacobi[(k - 1, k)] = off;
        }
    }
    let eig = jacobi.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let node = (1.0 + eig.eigenvalues[j]) / 2.0;
            // squared first eigenvector component = normalized Beta weight
            let weight = eig.eigenvectors[(0, j)].powi(2);
            (node, weight)
        })
        .collect();
    rule.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite nodes"));
    rule
}
