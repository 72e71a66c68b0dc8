//! Experiment orchestration for the `geochaos` command-line tool.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;

pub use config::{MapKind, RunConfig};
pub use error::CliError;
