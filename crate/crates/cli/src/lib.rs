//! Command-line front end: file formats and subcommands.

pub mod commands;
pub mod error;
pub mod io;

pub use error::{CliError, CliResult};
