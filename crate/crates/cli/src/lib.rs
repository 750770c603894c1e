//! Command-line front end: configuration, result cache and plot output.

pub mod config;
pub mod run;
pub mod svg;

pub use config::{ConfigError, RunConfig};
pub use run::{run, Artifacts, CliError, Command};
