//! Command-line front end: config parsing, experiment dispatch and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, exit_code, first_problem, Command, RunError};
pub use config::{parse_config, parse_with_overrides, ConfigError, RunConfig};
