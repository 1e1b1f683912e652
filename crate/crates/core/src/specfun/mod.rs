//! Special functions: Γ and the Mittag-Leffler family.

mod gamma;
mod mittag_leffler;

pub use gamma::{gamma, ln_gamma, rgamma};
pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_real, Branch, MLParams, MittagLeffler, SERIES_TERM_CAP, Z_MAX,
};

use crate::error::{Error, Result};
use crate::order::FracOrder;
use crate::real::Real;

/// t^{α−1} E_{α,α}(−λ t^α), the impulse response of ∂ₜ^α + λ.
///
/// α = 1 and α = 2 short-circuit to e^{−λt} and sin(√λ t)/√λ.
pub fn relaxation_kernel<T: Real>(alpha: FracOrder<T>, lambda: T, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::invalid("t", format!("{t} must be > 0")));
    }
    if lambda < T::zero() {
        return Err(Error::invalid("lambda", format!("{lambda} must be >= 0")));
    }
    let a = alpha.value();
    if a == T::one() {
        return Ok((-lambda * t).exp());
    }
    if a == T::lit(2.0) {
        if lambda == T::zero() {
            return Ok(t);
        }
        let w = lambda.sqrt();
        return Ok((w * t).sin() / w);
    }
    let e = mittag_leffler_real(MLParams::new(a, a)?, -lambda * t.powf(a))?;
    Ok(t.powf(a - T::one()) * e)
}
