//! Forward solvers: closed-kernel Duhamel composition over Dirichlet modes
//! or Fourier frequencies, homogeneous propagators, and observation traces.

mod basis;
mod homogeneous;
mod kernel;
mod moving;
mod spectral;

pub use basis::{duhamel_compose, ModalBasis, SpectralBasis, SymbolBasis};
pub use homogeneous::{solve_homogeneous_bounded, solve_homogeneous_free, to_frequency, to_space, SpatialField};
pub use kernel::KernelFamily;
pub use moving::{observe_and_perturb, solve_moving_source, ForwardOptions, ForwardSolution, TraceMeta, TraceSet};
pub use spectral::{CoefficientRule, SpectralProblem};
