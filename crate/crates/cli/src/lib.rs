//! Experiment runner for the `fracorbit` library: TOML-configured
//! simulations, reconstructions, stability tables and oracle checks with
//! deterministic CSV output.

pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use compare::{compare, ColumnDiff, CompareReport};
pub use config::{ExperimentConfig, Kind};
pub use error::CliError;
pub use run::{run, RunSummary, RESOLVED_CONFIG, THREADS_ENV};
