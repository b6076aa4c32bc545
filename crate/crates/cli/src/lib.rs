//! Batch front-end for `berryfield`: reads a TOML run configuration and
//! writes field dumps, verification reports, monopole scans and refinement
//! tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Outcome};
pub use config::{parse_config, Command, RunConfig};
pub use error::CliError;
