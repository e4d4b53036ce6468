//! Experiment driver for `projdiff-core`: presets, runs, convergence studies,
//! reports and the acceptance suite.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod report;
pub mod study;
pub mod thresholds;
pub mod verify;

pub use config::{load_config, ExperimentConfig};
pub use error::{HarnessError, Result};
