//! Orbit reconstruction by causal marching, the linear Volterra difference
//! system, and the stability harness.

mod config;
mod engine;
mod march;
mod stability;
mod volterra;

pub use config::ReconstructionConfig;
pub use engine::{memory_term, MarchEngine, NodeOperator};
pub use march::{
    reconstruct_orbit_global, reconstruct_orbit_local, select_subset, GlobalSettings, IntervalLog, Reconstruction,
    StepRecord,
};
pub use stability::{
    noise_sweep, random_localized_orbits, stability_experiment, synthetic_traces, NoiseSweep, StabilityRow,
    StabilityTable,
};
pub use volterra::{
    assemble_difference_system, volterra_difference_solve, DifferenceSystem, KernelTerm, VolterraSolution,
};
