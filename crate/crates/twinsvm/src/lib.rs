//! File formats, experiment runner and reports for `twinsvm-core`.
//!
//! - [`data`]: KEEL `.dat` and CSV datasets
//! - [`model_io`]: plain-text model files
//! - [`config`]: TOML experiment configuration
//! - [`experiment`]: parallel grid-searched runs and energy sweeps
//! - [`report`]: results, rank tables, Friedman and Nemenyi statistics

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod model_io;
pub mod report;

pub use error::{Error, Result};
pub use twinsvm_core as core;

/// Worker count from `TWINSVM_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("TWINSVM_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
