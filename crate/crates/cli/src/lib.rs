//! Library side of the `levy-invest` command-line tool: config loading,
//! subcommands and artifact writing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command};
pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::CliError;
