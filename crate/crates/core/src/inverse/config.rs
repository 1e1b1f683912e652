use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of the marching reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Reconstruction step; `None` uses the data grid. Must divide into the
    /// data grid by an integer factor.
    pub dt: Option<f64>,
    /// Moving-average half-width applied to traces before ∂ₜᵅ (0: off).
    pub mollifier: usize,
    /// Subtract the exactly known response to the source at γ(0) = 0
    /// before differentiating the traces.
    pub subtract_onset: bool,
    /// Number of onset powers t^{kα+n} the data derivative is made exact
    /// on (0: plain L1 scheme).
    pub onset_correction: usize,
    /// Abort when the Jacobian condition number exceeds this.
    pub max_condition: f64,
    /// Retry a failed Newton step through a half-step continuation.
    pub bisect_on_failure: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            dt: None,
            mollifier: 0,
            subtract_onset: true,
            onset_correction: 3,
            max_condition: 1e12,
            bisect_on_failure: true,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::invalid("newton_tol", format!("{} must be > 0", self.newton_tol)));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::invalid("newton_max_iter", "must be >= 1"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("{dt} must be > 0")));
            }
        }
        if !(self.max_condition > 1.0) {
            return Err(Error::invalid(
                "max_condition",
                format!("{} must be > 1", self.max_condition),
            ));
        }
        Ok(())
    }
}
