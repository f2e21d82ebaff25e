//! Batch driver for the `dualis` estimators: configuration, presets,
//! instance realization and output files.

pub mod config;
pub mod error;
pub mod instance;
pub mod presets;
pub mod run;

pub use config::{ExperimentConfig, Purpose, SamplerId, Sources};
pub use error::{CliError, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
