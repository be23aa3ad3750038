//! Command-line harness around `drokit_core`: config parsing, canned
//! presets, CSV trajectory output, the imbalance sweep, and the
//! acceptance criteria behind `drokit verify`.

pub mod acceptance;
pub mod config;
pub mod csvio;
pub mod experiment;
pub mod presets;
pub mod sweep;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, CliError, RunReport};
