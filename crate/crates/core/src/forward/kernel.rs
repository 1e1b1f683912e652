use num_complex::Complex;

use crate::error::Result;
use crate::fracops::ProductWeights;
use crate::order::FracOrder;
use crate::real::Real;
use crate::specfun::{MLParams, MittagLeffler};

/// Mittag-Leffler evaluators for one order α: the relaxation kernel
/// K(τ) = τ^{α−1}E_{α,α}(−sτ^α), its antiderivatives
/// K₁(τ) = τ^α E_{α,α+1}(−sτ^α), K₂(τ) = τ^{α+1}E_{α,α+2}(−sτ^α), and the
/// homogeneous multiplier τ^{⌈α⌉−1}E_{α,⌈α⌉}(−sτ^α).
#[derive(Debug, Clone)]
pub struct KernelFamily<T> {
    alpha: FracOrder<T>,
    e_aa: MittagLeffler<T>,
    e_a1: MittagLeffler<T>,
    e_a2: MittagLeffler<T>,
    e_ac: MittagLeffler<T>,
}

impl<T: Real> KernelFamily<T> {
    pub fn new(alpha: FracOrder<T>) -> Result<Self> {
        let a = alpha.value();
        let ml = |mu: T| MittagLeffler::new(MLParams::new(a, mu)?);
        Ok(Self {
            alpha,
            e_aa: ml(a)?,
            e_a1: ml(a + T::one())?,
            e_a2: ml(a + T::lit(2.0))?,
            e_ac: ml(T::from_index(alpha.ceil()))?,
        })
    }

    pub fn alpha(&self) -> FracOrder<T> {
        self.alpha
    }

    fn arg(&self, s: Complex<T>, tau: T) -> Complex<T> {
        -s * tau.powf(self.alpha.value())
    }

    /// Closed forms at α = 1 (any s) and α = 2 (real s ≥ 0), used once
    /// |s|τ^α ≥ 1 so that the subtractions below do not cancel.
    /// Returns (K, K₁, K₂).
    fn classical(&self, s: Complex<T>, tau: T) -> Option<(Complex<T>, Complex<T>, Complex<T>)> {
        let a = self.alpha.value();
        let t = Complex::new(tau, T::zero());
        if a == T::one() {
            if s.norm() * tau < T::one() {
                return None;
            }
            let k = (-s * tau).exp();
            let k1 = (Complex::new(T::one(), T::zero()) - k) / s;
            return Some((k, k1, (t - k1) / s));
        }
        if a == T::lit(2.0) && s.im == T::zero() && s.re >= T::zero() {
            let w = s.re.sqrt();
            if w * tau < T::one() {
                return None;
            }
            let k = (w * tau).sin() / w;
            let k1 = (T::one() - (w * tau).cos()) / s.re;
            let k2 = (tau - k) / s.re;
            return Some((
                Complex::new(k, T::zero()),
                Complex::new(k1, T::zero()),
                Complex::new(k2, T::zero()),
            ));
        }
        None
    }

    /// K(τ) for τ > 0.
    pub fn relaxation(&self, s: Complex<T>, tau: T) -> Result<Complex<T>> {
        let a = self.alpha.value();
        if a == T::one() {
            return Ok((-s * tau).exp());
        }
        if let Some((k, _, _)) = self.classical(s, tau) {
            return Ok(k);
        }
        Ok(self.e_aa.eval(self.arg(s, tau))? * tau.powf(a - T::one()))
    }

    pub fn first_antiderivative(&self, s: Complex<T>, tau: T) -> Result<Complex<T>> {
        if tau == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        if let Some((_, k1, _)) = self.classical(s, tau) {
            return Ok(k1);
        }
        let a = self.alpha.value();
        Ok(self.e_a1.eval(self.arg(s, tau))? * tau.powf(a))
    }

    pub fn second_antiderivative(&self, s: Complex<T>, tau: T) -> Result<Complex<T>> {
        if tau == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        if let Some((_, _, k2)) = self.classical(s, tau) {
            return Ok(k2);
        }
        let a = self.alpha.value();
        Ok(self.e_a2.eval(self.arg(s, tau))? * tau.powf(a + T::one()))
    }

    /// τ^{⌈α⌉−1}E_{α,⌈α⌉}(−sτ^α): the propagator of the homogeneous problem
    /// seeded with v₀ (α ≤ 1) or v₁ (α > 1).
    pub fn homogeneous(&self, s: Complex<T>, tau: T) -> Result<Complex<T>> {
        if tau == T::zero() {
            let v = if self.alpha.ceil() == 1 { T::one() } else { T::zero() };
            return Ok(Complex::new(v, T::zero()));
        }
        let a = self.alpha.value();
        if a == T::lit(2.0) && s.im == T::zero() && s.re >= T::zero() {
            // sin(√s τ)/√s with the removable singularity at s = 0
            let w = s.re.sqrt();
            let v = if w * tau < T::lit(1e-8) {
                tau
            } else {
                (w * tau).sin() / w
            };
            return Ok(Complex::new(v, T::zero()));
        }
        if a == T::one() {
            return Ok((-s * tau).exp());
        }
        let p = T::from_index(self.alpha.ceil() - 1);
        Ok(self.e_ac.eval(self.arg(s, tau))? * tau.powf(p))
    }

    /// Product-integration weights of ∫₀^{tₘ} f(τ')K(tₘ − τ')dτ' with step h.
    pub fn weights(&self, s: Complex<T>, h: T, n: usize) -> Result<ProductWeights<Complex<T>>> {
        let inv_h = Complex::new(T::one() / h, T::zero());
        ProductWeights::from_antiderivatives(
            n,
            inv_h,
            |k| self.first_antiderivative(s, T::from_index(k) * h),
            |k| self.second_antiderivative(s, T::from_index(k) * h),
        )
    }
}
