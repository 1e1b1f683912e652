//! Oracle suites: special values of the Mittag-Leffler function, the sector
//! estimate, the relaxation kernel identity and the Duhamel equivalence, with an independent
//! fractional ODE stepper.

mod stepper;
mod suites;

pub use stepper::fractional_relaxation_stepper;
pub use suites::{
    duhamel, kernel_identity, ml_estimate, run_all, sector_constant, special_values, Check, VerifyReport,
    HALF_ORDER_REFERENCE,
};
