use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Smallest order the reconstruction pipeline and experiment runner accept.
pub const MIN_SUPPORTED_ALPHA: f64 = 0.1;

/// Fractional order α ∈ (0, 2] of the time derivative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FracOrder<T>(T);

impl<T: Real> FracOrder<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha > T::zero() && alpha <= T::lit(2.0) {
            Ok(Self(alpha))
        } else {
            Err(Error::invalid("alpha", format!("{alpha} not in (0, 2]")))
        }
    }

    /// Like [`FracOrder::new`] but also enforces α ≥ [`MIN_SUPPORTED_ALPHA`].
    pub fn supported(alpha: T) -> Result<Self> {
        if alpha >= T::lit(MIN_SUPPORTED_ALPHA) && alpha <= T::lit(2.0) {
            Ok(Self(alpha))
        } else {
            Err(Error::invalid(
                "alpha",
                format!("alpha out of range ({MIN_SUPPORTED_ALPHA}, 2]"),
            ))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// ⌈α⌉ ∈ {1, 2}.
    #[inline]
    pub fn ceil(self) -> usize {
        if self.0 <= T::one() {
            1
        } else {
            2
        }
    }

    /// ⌊α⌋ ∈ {0, 1, 2}.
    #[inline]
    pub fn floor(self) -> usize {
        self.0.floor().to_usize().unwrap_or(0)
    }

    /// Diffusion-wave regime α ∈ (1, 2].
    pub fn is_wave(self) -> bool {
        self.0 > T::one()
    }
}
