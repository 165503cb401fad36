//! Experiment driver for two-scale Stokes homogenization: configuration,
//! the per-ε pipeline, rate fits and report files.

pub mod config;
pub mod dump;
mod error;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use pipeline::{run_experiment, RateReport, RunOutcome};
pub use report::emit_outputs;
