//! Experiment runner for smoothnet: synthesis, training, unit analysis
//! and seed-sweep summaries written as JSON and CSV artifacts.

pub mod catalog;
pub mod error;
pub mod run;
pub mod spec;

pub use error::{RunError, RunResult};
pub use spec::{ExperimentSpec, RunMode};
