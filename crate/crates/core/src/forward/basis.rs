use num_complex::Complex;
use rayon::prelude::*;

use super::kernel::KernelFamily;
use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::model::{BoxDomain, FreeSpace, Mode};
use crate::order::FracOrder;
use crate::real::Real;

/// Diagonalized spatial operator: eigenvalues λₙ on a bounded domain or
/// symbol values S(ξ) in free space.
pub trait SpectralBasis<T: Real>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn symbol(&self, i: usize) -> Complex<T>;

    /// Index whose symbol and data are the complex conjugates of entry `i`
    /// (the −ξ partner for real free-space problems).
    fn conjugate_partner(&self, _i: usize) -> Option<usize> {
        None
    }
}

/// Dirichlet eigenpairs of a [`BoxDomain`].
#[derive(Debug, Clone)]
pub struct ModalBasis<T> {
    domain: BoxDomain<T>,
    modes: Vec<Mode<T>>,
}

impl<T: Real> ModalBasis<T> {
    pub fn new(domain: BoxDomain<T>) -> Self {
        let modes = domain.modes();
        Self { domain, modes }
    }

    pub fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn eigenfunction(&self, i: usize, x: &[T]) -> T {
        self.domain.eigenfunction(&self.modes[i], x)
    }

    /// φᵢ(x) for every mode.
    pub fn eigenfunctions_at(&self, x: &[T]) -> Vec<T> {
        self.modes.iter().map(|m| self.domain.eigenfunction(m, x)).collect()
    }
}

impl<T: Real> SpectralBasis<T> for ModalBasis<T> {
    fn len(&self) -> usize {
        self.modes.len()
    }

    fn symbol(&self, i: usize) -> Complex<T> {
        Complex::new(self.modes[i].lambda, T::zero())
    }
}

/// Symbol values of a [`FreeSpace`] operator on its frequency grid.
#[derive(Debug, Clone)]
pub struct SymbolBasis<T> {
    space: FreeSpace<T>,
    symbols: Vec<Complex<T>>,
}

impl<T: Real> SymbolBasis<T> {
    pub fn new(space: FreeSpace<T>) -> Self {
        let grid = *space.grid();
        let symbols = (0..grid.len()).map(|k| space.symbol(&grid.node(k))).collect();
        Self { space, symbols }
    }

    pub fn space(&self) -> &FreeSpace<T> {
        &self.space
    }
}

impl<T: Real> SpectralBasis<T> for SymbolBasis<T> {
    fn len(&self) -> usize {
        self.symbols.len()
    }

    fn symbol(&self, i: usize) -> Complex<T> {
        self.symbols[i]
    }

    fn conjugate_partner(&self, i: usize) -> Option<usize> {
        self.space.grid().mirror(i)
    }
}

/// Fractional Duhamel composition in closed kernel form: per basis entry i,
/// uᵢ(tₘ) = ∫₀^{tₘ} fᵢ(s)(tₘ−s)^{α−1}E_{α,α}(−σᵢ(tₘ−s)^α) ds,
/// with fᵢ piecewise linear between grid nodes (product integration).
///
/// `source(i)` returns fᵢ(t₀..=t_N). Entries are processed in parallel; each
/// result is independent, so output is identical for any thread count.
/// Conjugate partners are filled by conjugation instead of recomputation.
pub fn duhamel_compose<T, B, F>(
    basis: &B,
    source: F,
    alpha: FracOrder<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<Vec<Complex<T>>>>
where
    T: Real,
    B: SpectralBasis<T> + ?Sized,
    F: Fn(usize) -> Result<Vec<Complex<T>>> + Sync,
{
    let family = KernelFamily::new(alpha)?;
    let n = grid.n_steps();
    let h = grid.dt();
    let canonical = |i: usize| basis.conjugate_partner(i).is_none_or(|p| p >= i);
    let computed: Vec<Option<Vec<Complex<T>>>> = (0..basis.len())
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<Complex<T>>>> {
            if !canonical(i) {
                return Ok(None);
            }
            let f = source(i)?;
            if f.len() != n + 1 {
                return Err(Error::DataMismatch(format!(
                    "source history {i} has {} samples, grid has {}",
                    f.len(),
                    n + 1
                )));
            }
            if f.iter().all(|v| *v == Complex::new(T::zero(), T::zero())) {
                return Ok(Some(f));
            }
            let w = family.weights(basis.symbol(i), h, n)?;
            Ok(Some(w.apply_all(&f)))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<Complex<T>>> = computed.into_iter().map(Option::unwrap_or_default).collect();
    for i in 0..out.len() {
        if basis.conjugate_partner(i) == Some(i) {
            // self-conjugate entries are real
            for z in out[i].iter_mut() {
                z.im = T::zero();
            }
        } else if !canonical(i) {
            // partner index is smaller, hence already filled
            let p = basis
                .conjugate_partner(i)
                .expect("non-canonical entries have a partner");
            out[i] = out[p].iter().map(|z| z.conj()).collect();
        }
    }
    Ok(out)
}
