//! Configuration parsing, subcommand dispatch and CSV output for the
//! `cascade-epr` binary.

pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use run::{run, Report, RunError};
pub use table::{format_number, Table};
