use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, RwLock};

use num_traits::Zero;

use crate::error::Result;
use crate::real::Real;
use crate::specfun::rgamma;

/// Product-integration weights for ∫₀^{tₘ} f(s) k(tₘ − s) ds on a uniform
/// grid, with f replaced by its piecewise-linear interpolant.
///
/// Built from the first two antiderivatives of the kernel,
/// K₁' = k and K₂' = K₁ with K₁(0) = K₂(0) = 0, so a weakly singular k
/// never has to be evaluated near τ = 0.
#[derive(Debug, Clone)]
pub struct ProductWeights<W> {
    /// weight of the current node (half hat, lag 0)
    self_weight: W,
    /// `full[k]`: interior node at lag k ≥ 1 (`full[0]` unused)
    full: Vec<W>,
    /// `start[k]`: node s = 0 seen from tₖ (half hat)
    start: Vec<W>,
}

impl<W> ProductWeights<W>
where
    W: Copy + Zero + Add<Output = W> + Sub<Output = W> + Mul<Output = W>,
{
    /// `k2(k)` must return K₂(k·h) for k = 0..=n+1 and `k1(k)` K₁(k·h) for
    /// k = 1..=n; `inv_h` is 1/h in the weight type.
    pub fn from_antiderivatives(
        n: usize,
        inv_h: W,
        mut k1: impl FnMut(usize) -> Result<W>,
        mut k2: impl FnMut(usize) -> Result<W>,
    ) -> Result<Self> {
        let k2v = (0..=n + 1).map(&mut k2).collect::<Result<Vec<W>>>()?;
        let mut full = vec![W::zero(); n + 1];
        let mut start = vec![W::zero(); n + 1];
        for k in 1..=n {
            full[k] = (k2v[k + 1] - k2v[k] - (k2v[k] - k2v[k - 1])) * inv_h;
            start[k] = k1(k)? - (k2v[k] - k2v[k - 1]) * inv_h;
        }
        Ok(Self {
            self_weight: k2v[1] * inv_h,
            full,
            start,
        })
    }

    /// Largest m for which [`ProductWeights::apply`] is valid.
    pub fn max_steps(&self) -> usize {
        self.full.len() - 1
    }

    pub fn self_weight(&self) -> W {
        self.self_weight
    }

    /// ∫₀^{tₘ} f k using f(t₀..=tₘ) from `f`.
    pub fn apply(&self, f: &[W], m: usize) -> W {
        if m == 0 {
            return W::zero();
        }
        self.history(f, m) + self.self_weight * f[m]
    }

    /// The integral without the current node's contribution, i.e. the part
    /// determined by f(t₀..tₘ₋₁).
    pub fn history(&self, f: &[W], m: usize) -> W {
        if m == 0 {
            return W::zero();
        }
        let mut acc = self.start[m] * f[0];
        for j in 1..m {
            acc = acc + self.full[m - j] * f[j];
        }
        acc
    }

    pub fn apply_all(&self, f: &[W]) -> Vec<W> {
        (0..f.len()).map(|m| self.apply(f, m)).collect()
    }
}

/// Weights of J^β (kernel τ^{β−1}/Γ(β)) for β > 0 on step h.
pub fn rl_integral_weights<T: Real>(beta: T, h: T, n: usize) -> ProductWeights<T> {
    let c1 = h.powf(beta) * rgamma(beta + T::one());
    let c2 = h.powf(beta) * rgamma(beta + T::lit(2.0));
    let p1 = |k: usize| T::from_index(k).powf(beta);
    let p2 = |k: usize| T::from_index(k).powf(beta + T::one());
    // K₁ = (kh)^β/Γ(β+1), K₂/h = h^β k^{β+1}/Γ(β+2)
    ProductWeights::from_antiderivatives(n, T::one(), |k| Ok(c1 * p1(k)), |k| Ok(c2 * p2(k)))
        .expect("closed-form weights are infallible")
}

/// L1 coefficients bₖ = (k+1)^{1−β} − k^{1−β} for β ∈ (0, 1).
pub fn l1_coefficients<T: Real>(beta: T, n: usize) -> Vec<T> {
    let e = T::one() - beta;
    (0..n)
        .map(|k| T::from_index(k + 1).powf(e) - T::from_index(k).powf(e))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    kind: u8,
    beta: u64,
    h: u64,
    n: usize,
}

impl Key {
    fn new<T: Real>(kind: u8, beta: T, h: T, n: usize) -> Self {
        Self {
            kind,
            beta: beta.to_f64_lossy().to_bits(),
            h: h.to_f64_lossy().to_bits(),
            n,
        }
    }
}

/// Per-(β, grid) cache of quadrature weights.
///
/// Lookups take a read lock; a miss computes outside the lock and the first
/// insert wins, so concurrent callers always observe identical weights.
#[derive(Debug, Default)]
pub struct WeightCache<T> {
    product: RwLock<HashMap<Key, Arc<ProductWeights<T>>>>,
    l1: RwLock<HashMap<Key, Arc<Vec<T>>>>,
}

impl<T: Real> WeightCache<T> {
    pub fn new() -> Self {
        Self {
            product: RwLock::new(HashMap::new()),
            l1: RwLock::new(HashMap::new()),
        }
    }

    pub fn rl_integral(&self, beta: T, h: T, n: usize) -> Arc<ProductWeights<T>> {
        let key = Key::new(0, beta, h, n);
        if let Some(w) = self.product.read().expect("cache lock").get(&key) {
            return w.clone();
        }
        let w = Arc::new(rl_integral_weights(beta, h, n));
        self.product
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(w)
            .clone()
    }

    pub fn l1(&self, beta: T, n: usize) -> Arc<Vec<T>> {
        let key = Key::new(1, beta, T::zero(), n);
        if let Some(w) = self.l1.read().expect("cache lock").get(&key) {
            return w.clone();
        }
        let w = Arc::new(l1_coefficients(beta, n));
        self.l1.write().expect("cache lock").entry(key).or_insert(w).clone()
    }

    pub fn len(&self) -> usize {
        self.product.read().expect("cache lock").len() + self.l1.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;

    #[test]
    fn weights_integrate_linear_functions_exactly() {
        // ∫₀ᵗ (a + b s)(t − s)^{-1/2} ds in closed form
        let (a, b, beta) = (0.7, -1.3, 0.5f64);
        let n = 10;
        let h = 0.1;
        let w = rl_integral_weights(beta, h, n);
        let f: Vec<f64> = (0..=n).map(|m| a + b * m as f64 * h).collect();
        for m in 1..=n {
            let t = m as f64 * h;
            let exact = a * t.powf(beta) / gamma(beta + 1.0) + b * t.powf(beta + 1.0) / gamma(beta + 2.0);
            assert!((w.apply(&f, m) - exact).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn history_excludes_current_node() {
        let w = rl_integral_weights(0.3f64, 0.05, 8);
        let f: Vec<f64> = (0..=8).map(|m| (m as f64).sin()).collect();
        for m in 1..=8 {
            let d = w.apply(&f, m) - w.history(&f, m);
            assert!((d - w.self_weight() * f[m]).abs() < 1e-15);
        }
    }

    #[test]
    fn cache_returns_shared_weights() {
        let c = WeightCache::<f64>::new();
        let a = c.rl_integral(0.5, 0.01, 100);
        let b = c.rl_integral(0.5, 0.01, 100);
        assert!(Arc::ptr_eq(&a, &b));
        let _ = c.l1(0.5, 100);
        assert_eq!(c.len(), 2);
    }
}
