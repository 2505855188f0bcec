//! Monte-Carlo experiment harness for the `lrfs-core` tracking filters.
//!
//! An experiment is a (scenario, filter, trial plan) triple: ground truth
//! is generated once, each trial replays it with independently seeded
//! measurement noise and clutter, and per-scan statistics (estimated
//! cardinality, OSPA, hypothesis counts) are aggregated across trials and
//! written as CSV/JSON. Everything is deterministic in (config, seed),
//! independent of trial execution order.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, ScenarioChoice};
pub use output::write_outputs;
pub use runner::{run_experiment, run_trial, trial_seed, ExperimentResult};

/// Harness-level error: configuration problems, I/O, or a failure
/// propagated from the filter library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lrfs_core::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
