use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform grid tₘ = m·dt on [0, t_end], m = 0..n_steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    t_end: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_end: T, n_steps: usize) -> Result<Self> {
        if !(t_end > T::zero()) || !t_end.is_finite() {
            return Err(Error::invalid("t_end", format!("{t_end} must be finite and > 0")));
        }
        if n_steps < 2 {
            return Err(Error::invalid("n_steps", format!("{n_steps} must be >= 2")));
        }
        Ok(Self { t_end, n_steps })
    }

    #[inline]
    pub fn t_end(&self) -> T {
        self.t_end
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.t_end / T::from_index(self.n_steps)
    }

    #[inline]
    pub fn node(&self, m: usize) -> T {
        // exact at the right end regardless of rounding in dt
        if m == self.n_steps {
            self.t_end
        } else {
            T::from_index(m) * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..=self.n_steps).map(|m| self.node(m)).collect()
    }

    /// The grid with `factor` times as many steps over the same horizon.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.t_end, self.n_steps * factor)
    }

    /// Every `factor`-th node of `self` as a grid, if the step counts divide.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::DataMismatch(format!(
                "{} steps not divisible by {factor}",
                self.n_steps
            )));
        }
        Self::new(self.t_end, self.n_steps / factor)
    }

    /// Grid covering [0, node(m)] with the same spacing.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        Self::new(self.node(m), m)
    }
}

/// Real samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction<T> {
    grid: TimeGrid<T>,
    values: Vec<T>,
    /// Leading nodes whose values come from extrapolation rather than the scheme.
    #[serde(default)]
    low_accuracy_head: usize,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: TimeGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DataMismatch(format!(
                "{} samples for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            low_accuracy_head: 0,
        })
    }

    pub fn from_fn(grid: TimeGrid<T>, mut f: impl FnMut(T) -> T) -> Self {
        let values = (0..grid.len()).map(|m| f(grid.node(m))).collect();
        Self {
            grid,
            values,
            low_accuracy_head: 0,
        }
    }

    pub fn zeros(grid: TimeGrid<T>) -> Self {
        Self::from_fn(grid, |_| T::zero())
    }

    pub(crate) fn with_low_accuracy_head(mut self, k: usize) -> Self {
        self.low_accuracy_head = k;
        self
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Number of leading nodes flagged as low accuracy (extrapolated).
    pub fn low_accuracy_head(&self) -> usize {
        self.low_accuracy_head
    }

    #[inline]
    pub fn at(&self, m: usize) -> T {
        self.values[m]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            low_accuracy_head: self.low_accuracy_head,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::DataMismatch("grids differ".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a - *b).collect(),
            low_accuracy_head: self.low_accuracy_head.max(other.low_accuracy_head),
        })
    }

    /// max |f(tₘ)| over nodes m ≥ `from`.
    pub fn sup_norm_from(&self, from: usize) -> T {
        self.values.iter().skip(from).fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn sup_norm(&self) -> T {
        self.sup_norm_from(0)
    }

    /// Keeps every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsened(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Self::new(grid, values)
    }

    /// Piecewise-linear interpolation at an arbitrary time in [0, t_end].
    pub fn interpolate(&self, t: T) -> T {
        let h = self.grid.dt();
        let n = self.grid.n_steps();
        let s = (t / h).max(T::zero());
        let m = s.floor().to_usize().unwrap_or(0).min(n - 1);
        let w = (s - T::from_index(m)).min(T::one());
        self.values[m] * (T::one() - w) + self.values[m + 1] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_uniform_and_end_exactly() {
        let g = TimeGrid::new(0.3f64, 7).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 8);
        assert_eq!(nodes[7], 0.3);
        assert!((nodes[3] - 3.0 * 0.3 / 7.0).abs() < 1e-16);
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(f64::INFINITY, 10).is_err());
    }

    #[test]
    fn sampled_length_is_checked() {
        let g = TimeGrid::new(1.0f64, 4).unwrap();
        assert!(SampledFunction::new(g, vec![0.0; 4]).is_err());
        assert!(SampledFunction::new(g, vec![0.0; 5]).is_ok());
    }

    #[test]
    fn subsample_and_interpolate() {
        let g = TimeGrid::new(1.0f64, 8).unwrap();
        let f = SampledFunction::from_fn(g, |t| 2.0 * t + 1.0);
        let c = f.subsample(2).unwrap();
        assert_eq!(c.grid().n_steps(), 4);
        assert_eq!(c.at(2), f.at(4));
        assert!((f.interpolate(0.33) - 1.66).abs() < 1e-14);
        assert!((f.interpolate(1.0) - 3.0).abs() < 1e-14);
        assert!(f.subsample(3).is_err());
    }
}
