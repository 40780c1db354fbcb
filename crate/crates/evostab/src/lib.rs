//! Experiment harness for `evostab-core`: configuration, seeded parallel
//! ensembles, file formats and the `evostab` command.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod network;
pub mod viz;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
