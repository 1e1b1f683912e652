#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod error;
pub mod forward;
pub mod fracops;
pub mod inverse;
pub mod linalg;
pub mod model;
pub mod order;
pub mod quadrature;
pub mod real;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use order::FracOrder;
pub use real::Real;

pub type FracOrderF64 = FracOrder<f64>;
pub type TimeGridF64 = fracops::TimeGrid<f64>;
pub type SampledFunctionF64 = fracops::SampledFunction<f64>;
pub type SourceProfileF64 = model::SourceProfile<f64>;
pub type OrbitF64 = model::Orbit<f64>;
pub type DomainSpecF64 = model::DomainSpec<f64>;
pub type TraceSetF64 = forward::TraceSet<f64>;
pub type ForwardSolutionF64 = forward::ForwardSolution<f64>;
pub type ReconstructionF64 = inverse::Reconstruction<f64>;
