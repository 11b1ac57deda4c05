//! Command-line front end: scenario loading, the `run`, `spectrum` and
//! `validate` commands and their artifacts.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_run, cmd_spectrum, cmd_validate, EngineChoice, ExportFlags, RunConfig, SpectrumConfig};
pub use config::{load_array, load_scenario, Overrides};
pub use error::CliError;
