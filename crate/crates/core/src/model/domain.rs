use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::profile::{FrequencyGrid, SourceProfile};
use crate::error::{Error, Result};
use crate::linalg::SmallMatrix;
use crate::real::Real;

/// Upper bound on the total number of retained Dirichlet modes.
pub const MAX_MODES: usize = 4096;

/// Default spectral cutoff: retain wavenumbers up to π/(δ/`MODE_CUTOFF_DIVISOR`).
pub const MODE_CUTOFF_DIVISOR: f64 = 32.0;

/// One Dirichlet eigenpair of −Δ on the centered box Πᵢ(−Lᵢ/2, Lᵢ/2).
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T> {
    pub index: Vec<usize>,
    pub wavenumber: Vec<T>,
    pub lambda: T,
}

/// Hyperrectangle with Dirichlet boundary, centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    lengths: Vec<T>,
    modes_per_axis: Vec<usize>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(lengths: Vec<T>, modes_per_axis: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 3 {
            return Err(Error::invalid("lengths", format!("{} axes, need 1..=3", lengths.len())));
        }
        if lengths.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::invalid("lengths", "side lengths must be finite and > 0"));
        }
        if modes_per_axis.len() != lengths.len() || modes_per_axis.contains(&0) {
            return Err(Error::invalid("modes", "one positive mode count per axis"));
        }
        let total: usize = modes_per_axis.iter().product();
        if total > MAX_MODES {
            return Err(Error::invalid(
                "modes",
                format!("{total} modes exceed the cap {MAX_MODES}"),
            ));
        }
        Ok(Self {
            lengths,
            modes_per_axis,
        })
    }

    /// Per axis, the smallest N with (Nπ/Lᵢ) ≥ π/δ_eff, δ_eff = δ/32,
    /// scaled down uniformly if the product exceeds [`MAX_MODES`].
    pub fn with_default_modes(lengths: Vec<T>, g: &SourceProfile<T>) -> Result<Self> {
        let delta_eff = g.delta() / T::lit(MODE_CUTOFF_DIVISOR);
        let mut counts: Vec<usize> = lengths
            .iter()
            .map(|&l| (l / delta_eff).ceil().to_usize().unwrap_or(1).max(1))
            .collect();
        let total: f64 = counts.iter().map(|&c| c as f64).product();
        if total > MAX_MODES as f64 {
            let shrink = (MAX_MODES as f64 / total).powf(1.0 / counts.len() as f64);
            for c in counts.iter_mut() {
                *c = ((*c as f64 * shrink).floor() as usize).max(1);
            }
            log::warn!("mode count capped at {counts:?} (cap {MAX_MODES})");
        }
        Self::new(lengths, counts)
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn modes_per_axis(&self) -> &[usize] {
        &self.modes_per_axis
    }

    /// All retained eigenpairs sorted by eigenvalue.
    pub fn modes(&self) -> Vec<Mode<T>> {
        let d = self.dim();
        let total: usize = self.modes_per_axis.iter().product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut index = vec![0; d];
            for a in (0..d).rev() {
                index[a] = rest % self.modes_per_axis[a] + 1;
                rest /= self.modes_per_axis[a];
            }
            let wavenumber: Vec<T> = index
                .iter()
                .zip(&self.lengths)
                .map(|(&n, &l)| T::from_index(n) * T::PI() / l)
                .collect();
            let lambda = wavenumber.iter().map(|&k| k * k).sum();
            out.push(Mode {
                index,
                wavenumber,
                lambda,
            });
        }
        out.sort_by(|a, b| {
            a.lambda
                .partial_cmp(&b.lambda)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.index.cmp(&b.index))
        });
        out
    }

    /// φₙ(x) = Πᵢ √(2/Lᵢ) sin(kᵢ(xᵢ + Lᵢ/2)).
    pub fn eigenfunction(&self, mode: &Mode<T>, x: &[T]) -> T {
        let half = T::lit(0.5);
        mode.wavenumber
            .iter()
            .zip(&self.lengths)
            .zip(x)
            .map(|((&k, &l), &xi)| (T::lit(2.0) / l).sqrt() * (k * (xi + half * l)).sin())
            .fold(T::one(), |a, b| a * b)
    }

    /// Whether the closed ball B_r(x) lies strictly inside the box.
    pub fn contains_ball(&self, x: &[T], r: T) -> bool {
        x.iter()
            .zip(&self.lengths)
            .all(|(&xi, &l)| xi.abs() + r < l * T::lit(0.5))
    }
}

/// Free space with ℒ = −∇·(A∇) + b·∇ + c and symbol S(ξ) = Aξ·ξ + i b·ξ + c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeSpace<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    c: T,
    grid: FrequencyGrid<T>,
}

impl<T: Real> FreeSpace<T> {
    pub fn new(a: Vec<Vec<T>>, b: Vec<T>, c: T, grid: FrequencyGrid<T>) -> Result<Self> {
        let d = a.len();
        if d != grid.dim() || b.len() != d || a.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(
                "diffusion",
                format!("A, b and the grid must all be {d}-dimensional"),
            ));
        }
        for i in 0..d {
            for j in 0..i {
                if (a[i][j] - a[j][i]).abs() > T::epsilon() * T::lit(16.0) * (a[i][j].abs() + a[j][i].abs()) {
                    return Err(Error::invalid("diffusion", "A must be symmetric"));
                }
            }
        }
        let this = Self { a, b, c, grid };
        if !(this.min_diffusion() > T::zero()) {
            return Err(Error::invalid("diffusion", "A must be positive definite"));
        }
        Ok(this)
    }

    /// A = I, b = 0, c = 0.
    pub fn laplacian(grid: FrequencyGrid<T>) -> Result<Self> {
        let d = grid.dim();
        let a = (0..d)
            .map(|i| (0..d).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self::new(a, vec![T::zero(); d], T::zero(), grid)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn diffusion(&self) -> &[Vec<T>] {
        &self.a
    }

    pub fn drift(&self) -> &[T] {
        &self.b
    }

    pub fn reaction(&self) -> T {
        self.c
    }

    /// κ, the least eigenvalue of A.
    pub fn min_diffusion(&self) -> T {
        // Cholesky succeeds iff A is positive definite; then the singular
        // values are the eigenvalues
        let mut ok = true;
        let d = self.dim();
        let mut l = vec![vec![T::zero(); d]; d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s = s - l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= T::zero() {
                        ok = false;
                        break;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        if !ok {
            return T::zero();
        }
        let s = SmallMatrix::from_rows(&self.a).singular_values();
        s[s.len() - 1]
    }

    /// Drift-free with c ≥ 0, as the wave case requires.
    pub fn wave_compatible(&self) -> bool {
        self.b.iter().all(|&v| v == T::zero()) && self.c >= T::zero()
    }

    pub fn symbol(&self, xi: &[T]) -> Complex<T> {
        let d = self.dim();
        let mut re = self.c;
        let mut im = T::zero();
        for i in 0..d {
            im = im + self.b[i] * xi[i];
            for j in 0..d {
                re = re + self.a[i][j] * xi[i] * xi[j];
            }
        }
        Complex::new(re, im)
    }
}

/// Spatial setting of the forward problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec<T> {
    Bounded(BoxDomain<T>),
    Free(FreeSpace<T>),
}

impl<T: Real> DomainSpec<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Bounded(b) => b.dim(),
            Self::Free(f) => f.dim(),
        }
    }

    /// Interior test for observation points.
    pub fn is_interior(&self, x: &[T]) -> bool {
        match self {
            Self::Bounded(b) => b.contains_ball(x, T::zero()),
            Self::Free(_) => x.iter().all(|v| v.is_finite()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_are_sorted_and_orthonormal() {
        let dom = BoxDomain::new(vec![2.0f64, 1.5], vec![6, 5]).unwrap();
        let modes = dom.modes();
        assert_eq!(modes.len(), 30);
        assert!(modes.windows(2).all(|w| w[0].lambda <= w[1].lambda));
        assert!(modes[0].lambda < modes[1].lambda);
        // midpoint rule is exact for these trigonometric products
        let n = 64;
        let (lx, ly) = (2.0, 1.5);
        for (p, q) in [(0, 0), (0, 1), (3, 7), (12, 12), (5, 29)] {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = [
                        -1.0 + (i as f64 + 0.5) * lx / n as f64,
                        -0.75 + (j as f64 + 0.5) * ly / n as f64,
                    ];
                    s += dom.eigenfunction(&modes[p], &x) * dom.eigenfunction(&modes[q], &x);
                }
            }
            s *= lx * ly / (n * n) as f64;
            let expect = if p == q { 1.0 } else { 0.0 };
            assert!((s - expect).abs() < 1e-12, "({p},{q}): {s}");
        }
    }

    #[test]
    fn eigenfunctions_vanish_on_the_boundary() {
        let dom = BoxDomain::new(vec![1.2f64], vec![10]).unwrap();
        for m in dom.modes() {
            assert!(dom.eigenfunction(&m, &[0.6]).abs() < 1e-14);
            assert!(dom.eigenfunction(&m, &[-0.6]).abs() < 1e-14);
        }
    }

    #[test]
    fn default_mode_count_follows_cutoff() {
        let g = SourceProfile::new(0.4, 1.0, 1).unwrap();
        let dom = BoxDomain::with_default_modes(vec![2.0], &g).unwrap();
        assert_eq!(dom.modes_per_axis(), &[160]);
        let g3 = SourceProfile::new(0.4, 1.0, 3).unwrap();
        let dom3 = BoxDomain::with_default_modes(vec![2.0; 3], &g3).unwrap();
        assert!(dom3.modes_per_axis().iter().product::<usize>() <= MAX_MODES);
    }

    #[test]
    fn free_space_validation_and_symbol() {
        let grid = FrequencyGrid::new(10.0f64, 16, 2).unwrap();
        let a = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
        let f = FreeSpace::new(a, vec![0.3, 0.0], 0.1, grid).unwrap();
        let s = f.symbol(&[1.0, -2.0]);
        assert!((s.re - (2.0 - 2.0 + 4.0 + 0.1)).abs() < 1e-14);
        assert!((s.im - 0.3).abs() < 1e-14);
        assert!(!f.wave_compatible());
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(FreeSpace::new(bad, vec![0.0; 2], 0.0, grid).is_err());
        let asym = vec![vec![1.0, 0.2], vec![0.1, 1.0]];
        assert!(FreeSpace::new(asym, vec![0.0; 2], 0.0, grid).is_err());
    }
}
