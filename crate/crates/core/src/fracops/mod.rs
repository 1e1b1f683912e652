//! Discrete fractional calculus on uniform time grids.
//!
//! Conventions: `J^β` is the Riemann-Liouville integral, `∂^β` the Caputo
//! derivative J^{⌈β⌉−β}∘d^{⌈β⌉}, `D^β` the Riemann-Liouville derivative
//! d^{⌈β⌉}∘J^{⌈β⌉−β}.

mod grid;
mod weights;

pub use grid::{SampledFunction, TimeGrid};
pub use weights::{l1_coefficients, rl_integral_weights, ProductWeights, WeightCache};

use crate::error::{Error, Result};
use crate::linalg::SmallMatrix;
use crate::real::Real;
use crate::specfun::{gamma, rgamma};

/// Below this many steps the Caputo schemes are too coarse to trust.
pub const MIN_RELIABLE_STEPS: usize = 8;

/// Fractional operators backed by a shared [`WeightCache`].
#[derive(Debug, Default)]
pub struct FracCalculus<T> {
    cache: WeightCache<T>,
}

impl<T: Real> FracCalculus<T> {
    pub fn new() -> Self {
        Self {
            cache: WeightCache::new(),
        }
    }

    pub fn cache(&self) -> &WeightCache<T> {
        &self.cache
    }

    /// J^β f by product integration; β = 0 returns f.
    pub fn rl_integral(&self, f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(Error::invalid("beta", format!("{beta} not in [0, 1]")));
        }
        if beta == T::zero() {
            return Ok(f.clone());
        }
        let grid = *f.grid();
        let w = self.cache.rl_integral(beta, grid.dt(), grid.n_steps());
        SampledFunction::new(grid, w.apply_all(f.values()))
    }

    /// Caputo derivative ∂^β f for β ∈ (0, 2].
    ///
    /// β ∈ (0,1): L1 scheme. β ∈ (1,2): L1 scheme of order β−1 applied to the
    /// second-order finite-difference derivative f'. β = 1, 2: finite
    /// differences, one-sided at the ends. For β ∉ {1, 2} the value at t₀
    /// is linearly extrapolated and flagged via
    /// [`SampledFunction::low_accuracy_head`].
    ///
    /// Assumes f is C²-like (β ≤ 1) or C³-like (β > 1) on the grid.
    pub fn caputo_derivative(&self, f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
        let one = T::one();
        let two = T::lit(2.0);
        if !(beta > T::zero() && beta <= two) {
            return Err(Error::invalid("beta", format!("{beta} not in (0, 2]")));
        }
        let grid = *f.grid();
        if grid.n_steps() < MIN_RELIABLE_STEPS {
            log::warn!(
                "caputo_derivative on {} steps (< {MIN_RELIABLE_STEPS}): results are coarse",
                grid.n_steps()
            );
        }
        if beta == one {
            return SampledFunction::new(grid, first_difference(f.values(), grid.dt()));
        }
        if beta == two {
            return SampledFunction::new(grid, second_difference(f.values(), grid.dt()));
        }
        let (order, base) = if beta < one {
            (beta, f.values().to_vec())
        } else {
            (beta - one, first_difference(f.values(), grid.dt()))
        };
        let values = self.l1(&base, order, grid.dt());
        Ok(SampledFunction::new(grid, values)?.with_low_accuracy_head(1))
    }

    /// Caputo derivative with starting weights that make the scheme exact
    /// on t^σ for each σ in `exponents` (Lubich-type correction for data with
    /// a non-smooth onset, e.g. u ~ c₁t^β + c₂t^{2β} + …).
    ///
    /// Exponents must be distinct, non-integer and > β − 1; at most
    /// `n_steps` of them are used.
    pub fn caputo_derivative_corrected(
        &self,
        f: &SampledFunction<T>,
        beta: T,
        exponents: &[T],
    ) -> Result<SampledFunction<T>> {
        let base = self.caputo_derivative(f, beta)?;
        let grid = *f.grid();
        let n = grid.n_steps();
        let s = exponents.len().min(n);
        if s == 0 {
            return Ok(base);
        }
        let sig = &exponents[..s];
        if sig.iter().any(|&e| e.fract() == T::zero() || e <= beta - T::one()) {
            return Err(Error::invalid(
                "exponents",
                "exponents must be non-integer and > beta - 1",
            ));
        }
        let h = grid.dt();
        // rows scaled by h^{−σ}: A[k][j] = (j+1)^σ_k
        let rows: Vec<Vec<T>> = sig
            .iter()
            .map(|&e| (1..=s).map(|j| T::from_index(j).powf(e)).collect())
            .collect();
        let a = SmallMatrix::from_rows(&rows);
        // defect_k(m) = exact ∂^β t^σ − scheme, scaled by h^{−σ}
        let defects = sig
            .iter()
            .map(|&e| {
                let basis = SampledFunction::from_fn(grid, |t| t.powf(e));
                let scheme = self.caputo_derivative(&basis, beta)?;
                let c = gamma(e + T::one()) * rgamma(e + T::one() - beta);
                let scale = h.powf(-e);
                Ok((0..=n)
                    .map(|m| (c * grid.node(m).powf(e - beta) - scheme.at(m)) * scale)
                    .collect::<Vec<T>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = base.into_values();
        for m in 1..=n {
            let r: Vec<T> = defects.iter().map(|d| d[m]).collect();
            let w = a.solve(&r)?;
            for (j, wj) in w.iter().enumerate() {
                out[m] = out[m] + *wj * f.at(j + 1);
            }
        }
        out[0] = if n >= 2 { T::lit(2.0) * out[1] - out[2] } else { out[1] };
        Ok(SampledFunction::new(grid, out)?.with_low_accuracy_head(1))
    }

    fn l1(&self, f: &[T], beta: T, h: T) -> Vec<T> {
        let n = f.len() - 1;
        let b = self.cache.l1(beta, n);
        let scale = h.powf(-beta) * rgamma(T::lit(2.0) - beta);
        let diffs: Vec<T> = f.windows(2).map(|w| w[1] - w[0]).collect();
        let mut out = vec![T::zero(); n + 1];
        for m in 1..=n {
            // Σ_k b_k (f_{m−k} − f_{m−k−1})
            let mut acc = T::zero();
            for k in 0..m {
                acc = acc + b[k] * diffs[m - k - 1];
            }
            out[m] = scale * acc;
        }
        out[0] = if n >= 2 { T::lit(2.0) * out[1] - out[2] } else { out[1] };
        out
    }

    /// Riemann-Liouville derivative D^β f = d/dt J^{1−β} f for β ∈ (0, 1).
    pub fn rl_derivative(&self, f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::invalid("beta", format!("{beta} not in (0, 1)")));
        }
        let j = self.rl_integral(f, T::one() - beta)?;
        SampledFunction::new(*f.grid(), first_difference(j.values(), f.grid().dt()))
    }
}

/// J^β f with freshly computed weights.
pub fn rl_integral<T: Real>(f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
    FracCalculus::new().rl_integral(f, beta)
}

/// ∂^β f with freshly computed weights; see [`FracCalculus::caputo_derivative`].
pub fn caputo_derivative<T: Real>(f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
    FracCalculus::new().caputo_derivative(f, beta)
}

/// D^β f with freshly computed weights.
pub fn rl_derivative<T: Real>(f: &SampledFunction<T>, beta: T) -> Result<SampledFunction<T>> {
    FracCalculus::new().rl_derivative(f, beta)
}

/// The `count` smallest non-integer exponents kβ + n (k ≥ 1, n ≥ 0) below
/// the order of the plain Caputo scheme: the onset powers of solutions of
/// ∂^β u = F with smooth F and zero start that the scheme does not already
/// resolve. Correcting higher powers degrades late-time accuracy.
pub fn onset_exponents<T: Real>(beta: T, count: usize) -> Vec<T> {
    let tol = T::lit(1e-6);
    let order = if beta < T::one() {
        T::lit(2.0) - beta
    } else {
        T::lit(3.0) - beta
    };
    let mut out: Vec<T> = Vec::new();
    let mut k = 1;
    while T::from_index(k) * beta < order {
        let mut n = 0;
        loop {
            let e = T::from_index(k) * beta + T::from_index(n);
            if e >= order - tol {
                break;
            }
            if (e - e.round()).abs() > tol && out.iter().all(|&o| (o - e).abs() > tol) {
                out.push(e);
            }
            n += 1;
        }
        k += 1;
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite exponents"));
    out.truncate(count);
    out
}

/// Centered moving average with half-width `w`, shrunk near the ends so the
/// window stays symmetric (linear data pass through unchanged).
pub fn mollify<T: Real>(f: &SampledFunction<T>, w: usize) -> SampledFunction<T> {
    if w == 0 {
        return f.clone();
    }
    let v = f.values();
    let n = v.len() - 1;
    let out = (0..=n)
        .map(|m| {
            let r = w.min(m).min(n - m);
            let s: T = v[m - r..=m + r].iter().copied().sum();
            s / T::from_index(2 * r + 1)
        })
        .collect();
    SampledFunction::new(*f.grid(), out).expect("same grid")
}

/// Second-order first derivative: centered inside, one-sided at the ends.
pub fn first_difference<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len() - 1;
    let two = T::lit(2.0);
    let mut d = vec![T::zero(); n + 1];
    for m in 1..n {
        d[m] = (f[m + 1] - f[m - 1]) / (two * h);
    }
    if n >= 2 {
        let three = T::lit(3.0);
        let four = T::lit(4.0);
        d[0] = (-three * f[0] + four * f[1] - f[2]) / (two * h);
        d[n] = (three * f[n] - four * f[n - 1] + f[n - 2]) / (two * h);
    } else {
        d[0] = (f[1] - f[0]) / h;
        d[n] = d[0];
    }
    d
}

/// Second derivative: centered inside, second-order one-sided at the ends
/// when at least four nodes are available.
pub fn second_difference<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len() - 1;
    let two = T::lit(2.0);
    let h2 = h * h;
    let mut d = vec![T::zero(); n + 1];
    for m in 1..n {
        d[m] = (f[m + 1] - two * f[m] + f[m - 1]) / h2;
    }
    if n >= 3 {
        let (four, five) = (T::lit(4.0), T::lit(5.0));
        d[0] = (two * f[0] - five * f[1] + four * f[2] - f[3]) / h2;
        d[n] = (two * f[n] - five * f[n - 1] + four * f[n - 2] - f[n - 3]) / h2;
    } else {
        d[0] = d[1];
        d[n] = d[n - 1];
    }
    d
}
