//! Library behind the `mial` command: run configurations, experiment
//! artifacts and reports.
//!
//! Output files carry the hash of the effective configuration and the base
//! seed, so every table can be traced back to the run that produced it.

pub mod commands;
pub mod config;
pub mod error;
pub mod provenance;

pub use commands::{cmd_report, cmd_run, cmd_serve, cmd_synth, ReportOptions, ServeOptions};
pub use config::{Overrides, Preset, RunConfig};
pub use error::{CliError, CliResult};
