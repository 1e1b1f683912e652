use num_complex::Complex;
use rayon::prelude::*;

use super::basis::{ModalBasis, SpectralBasis, SymbolBasis};
use crate::error::{Error, Result};
use crate::model::{profile_fourier, two_pi_pow, BoxDomain, DomainSpec, FreeSpace, SourceProfile};
use crate::real::Real;

/// How the bounded-domain source coefficients fₙ(s) = (g(·−γ(s)), φₙ) are
/// computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    /// Tensor quadrature of g(y)φₙ(y + γ) over the translated support.
    #[default]
    Direct,
    /// fₙ(γ) = φₙ(γ)·∫g(y)Πcos(kᵢyᵢ)dy, exact for the even profile.
    Factorized,
}

/// A source profile coupled to a diagonalized operator: source
/// coefficients per basis entry and observation rows at points.
///
/// A field with coefficients û satisfies u(x) = Re Σᵢ rowᵢ(x)ûᵢ and
/// ℒu(x) = Re Σᵢ rowᵢ(x)σᵢûᵢ.
#[derive(Debug, Clone)]
pub enum SpectralProblem<T> {
    Bounded {
        basis: ModalBasis<T>,
        profile: SourceProfile<T>,
        /// ∫g(y)Πcos(kᵢyᵢ)dy per mode
        moments: Vec<T>,
        quadrature_points: usize,
    },
    Free {
        basis: SymbolBasis<T>,
        /// ĝ on the frequency grid
        ghat: Vec<Complex<T>>,
    },
}

impl<T: Real> SpectralProblem<T> {
    pub fn new(g: &SourceProfile<T>, domain: &DomainSpec<T>) -> Result<Self> {
        if g.dim() != domain.dim() {
            return Err(Error::DataMismatch(format!(
                "profile dim {} vs domain dim {}",
                g.dim(),
                domain.dim()
            )));
        }
        match domain {
            DomainSpec::Bounded(b) => Ok(Self::bounded(g, b.clone())),
            DomainSpec::Free(f) => Self::free(g, f.clone()),
        }
    }

    fn bounded(g: &SourceProfile<T>, domain: BoxDomain<T>) -> Self {
        let basis = ModalBasis::new(domain);
        let k_max = basis
            .modes()
            .iter()
            .flat_map(|m| m.wavenumber.iter().copied())
            .fold(T::zero(), |a, b| a.max(b));
        let quadrature_points = g.points_for_wavenumber(k_max);
        let quad = g.quadrature(quadrature_points);
        let moments = basis
            .modes()
            .par_iter()
            .map(|m| quad.cosine_moment(&m.wavenumber))
            .collect();
        Self::Bounded {
            basis,
            profile: *g,
            moments,
            quadrature_points,
        }
    }

    fn free(g: &SourceProfile<T>, space: FreeSpace<T>) -> Result<Self> {
        let table = profile_fourier(g, space.grid())?;
        Ok(Self::Free {
            basis: SymbolBasis::new(space),
            ghat: table.values,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Bounded { basis, .. } => basis.domain().dim(),
            Self::Free { basis, .. } => basis.space().dim(),
        }
    }

    pub fn basis(&self) -> &dyn SpectralBasis<T> {
        match self {
            Self::Bounded { basis, .. } => basis,
            Self::Free { basis, .. } => basis,
        }
    }

    pub fn len(&self) -> usize {
        self.basis().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbol(&self, i: usize) -> Complex<T> {
        self.basis().symbol(i)
    }

    /// Source coefficients for the source centred at γ.
    pub fn source_coefficients(&self, gamma: &[T]) -> Vec<Complex<T>> {
        match self {
            Self::Bounded { basis, moments, .. } => basis
                .modes()
                .iter()
                .zip(moments)
                .map(|(m, &c)| Complex::new(c * basis.domain().eigenfunction(m, gamma), T::zero()))
                .collect(),
            Self::Free { basis, ghat } => {
                let grid = basis.space().grid();
                ghat.iter()
                    .enumerate()
                    .map(|(k, &gh)| gh * Complex::from_polar(T::one(), -dot(&grid.node(k), gamma)))
                    .collect()
            }
        }
    }

    /// ∂/∂γₐ of [`SpectralProblem::source_coefficients`], indexed `[a][i]`.
    pub fn source_gradient(&self, gamma: &[T]) -> Vec<Vec<Complex<T>>> {
        let d = self.dim();
        match self {
            Self::Bounded { basis, moments, .. } => {
                let dom = basis.domain();
                let half = T::lit(0.5);
                (0..d)
                    .map(|a| {
                        basis
                            .modes()
                            .iter()
                            .zip(moments)
                            .map(|(m, &c)| {
                                let mut v = c;
                                for (b, ((&k, &l), &x)) in m.wavenumber.iter().zip(dom.lengths()).zip(gamma).enumerate()
                                {
                                    let norm = (T::lit(2.0) / l).sqrt();
                                    let arg = k * (x + half * l);
                                    v = v * if a == b { norm * k * arg.cos() } else { norm * arg.sin() };
                                }
                                Complex::new(v, T::zero())
                            })
                            .collect()
                    })
                    .collect()
            }
            Self::Free { basis, ghat } => {
                let grid = basis.space().grid();
                (0..d)
                    .map(|a| {
                        ghat.iter()
                            .enumerate()
                            .map(|(k, &gh)| {
                                let xi = grid.node(k);
                                let e = Complex::from_polar(T::one(), -dot(&xi, gamma));
                                gh * e * Complex::new(T::zero(), -xi[a])
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Source coefficient histories along sampled centres, `[i][m]`.
    pub fn source_histories(&self, centres: &[Vec<T>], rule: CoefficientRule) -> Vec<Vec<Complex<T>>> {
        let per_time: Vec<Vec<Complex<T>>> = match (self, rule) {
            (
                Self::Bounded {
                    basis,
                    profile,
                    quadrature_points,
                    ..
                },
                CoefficientRule::Direct,
            ) => centres
                .par_iter()
                .map(|c| direct_coefficients(basis, profile, *quadrature_points, c))
                .collect(),
            _ => centres.par_iter().map(|c| self.source_coefficients(c)).collect(),
        };
        (0..self.len())
            .map(|i| per_time.iter().map(|v| v[i]).collect())
            .collect()
    }

    /// rowᵢ(x): φₙ(x) on a bounded domain, (2π)^{−d/2}Δξ^d e^{ix·ξ} in free space.
    pub fn observation_row(&self, x: &[T]) -> Vec<Complex<T>> {
        match self {
            Self::Bounded { basis, .. } => basis
                .eigenfunctions_at(x)
                .into_iter()
                .map(|v| Complex::new(v, T::zero()))
                .collect(),
            Self::Free { basis, .. } => {
                let grid = basis.space().grid();
                let c = grid.cell_volume() * two_pi_pow(grid.dim(), -T::lit(0.5));
                (0..grid.len())
                    .map(|k| Complex::from_polar(c, dot(&grid.node(k), x)))
                    .collect()
            }
        }
    }

    /// Relative size of the truncated tail: the largest source coefficient
    /// of the highest retained mode (bounded) or |ĝ| on the box boundary
    /// (free), each divided by the largest coefficient overall.
    pub fn tail_indicator(&self, histories: &[Vec<Complex<T>>]) -> T {
        let peak = |v: &[Complex<T>]| v.iter().map(|z| z.norm()).fold(T::zero(), |a, b| a.max(b));
        let overall = histories.iter().map(|h| peak(h)).fold(T::zero(), |a, b| a.max(b));
        if overall == T::zero() {
            return T::zero();
        }
        let tail = match self {
            Self::Bounded { .. } => histories.last().map(|h| peak(h)).unwrap_or(T::zero()),
            Self::Free { basis, .. } => {
                let grid = basis.space().grid();
                (0..grid.len())
                    .filter(|&k| grid.unflatten(k).contains(&0))
                    .map(|k| peak(&histories[k]))
                    .fold(T::zero(), |a, b| a.max(b))
            }
        };
        tail / overall
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// (g(·−γ), φₙ) for all modes by trapezoid quadrature on γ + [−δ, δ]^d,
/// contracting the tensor of g-values one axis at a time against the
/// per-axis sine factors.
fn direct_coefficients<T: Real>(
    basis: &ModalBasis<T>,
    g: &SourceProfile<T>,
    points: usize,
    gamma: &[T],
) -> Vec<Complex<T>> {
    let dom = basis.domain();
    let d = dom.dim();
    let n = points.max(4);
    let delta = g.delta();
    let h = T::lit(2.0) * delta / T::from_index(n);
    let nodes: Vec<T> = (1..n).map(|j| -delta + T::from_index(j) * h).collect();
    let q = nodes.len();
    let mut x = vec![T::zero(); d];
    let mut tensor: Vec<T> = (0..q.pow(d as u32))
        .map(|flat| {
            let mut rest = flat;
            for a in (0..d).rev() {
                x[a] = nodes[rest % q];
                rest /= q;
            }
            g.value(&x)
        })
        .collect();
    let cell = h.powi(d as i32);
    // shape is [s_0, …, s_{d−1}] with sₐ = q before contraction, Nₐ after
    let mut shape = vec![q; d];
    let half = T::lit(0.5);
    for a in (0..d).rev() {
        let l = dom.lengths()[a];
        let na = dom.modes_per_axis()[a];
        let norm = (T::lit(2.0) / l).sqrt();
        let table: Vec<Vec<T>> = (1..=na)
            .map(|k| {
                let kk = T::from_index(k) * T::PI() / l;
                nodes
                    .iter()
                    .map(|&y| norm * (kk * (y + gamma[a] + half * l)).sin())
                    .collect()
            })
            .collect();
        let outer: usize = shape[..a].iter().product();
        let inner: usize = shape[a + 1..].iter().product();
        let mut next = vec![T::zero(); outer * na * inner];
        for o in 0..outer {
            for (k, row) in table.iter().enumerate() {
                for i in 0..inner {
                    let mut acc = T::zero();
                    for (j, &s) in row.iter().enumerate() {
                        acc = acc + s * tensor[(o * q + j) * inner + i];
                    }
                    next[(o * na + k) * inner + i] = acc;
                }
            }
        }
        tensor = next;
        shape[a] = na;
    }
    basis
        .modes()
        .iter()
        .map(|m| {
            let flat = m
                .index
                .iter()
                .zip(dom.modes_per_axis())
                .fold(0, |acc, (&i, &na)| acc * na + (i - 1));
            Complex::new(cell * tensor[flat], T::zero())
        })
        .collect()
}
