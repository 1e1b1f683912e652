//! Problem data: source profile, orbit, domains and observation geometry.

mod domain;
mod observe;
mod orbit;
mod profile;

pub use domain::{BoxDomain, DomainSpec, FreeSpace, Mode, MAX_MODES, MODE_CUTOFF_DIVISOR};
pub use observe::{
    check_admissible, observability_condition, observability_on_samples, sample_ball, select_observation_points,
    AdmissibilityReport, Clause, ObservabilityBound, ObservationLayout, ObservationSet, DEFAULT_OBSERVABILITY_SAMPLES,
    MIN_ADMISSIBILITY_SAMPLES, SINGULAR_CONDITION, VELOCITY_TOLERANCE,
};
pub use orbit::{LocalizedOrbitBound, Orbit, OrbitShape, SineTerm};
pub(crate) use profile::two_pi_pow;
pub use profile::{
    profile_fourier, FourierTable, FrequencyGrid, ProfileQuadrature, SourceProfile, MIN_POINTS_ACROSS_SUPPORT,
};
