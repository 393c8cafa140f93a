//! File formats and the command-line driver for `quasipower-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod models;
pub mod output;

pub use cli::{run, Cli, Outcome};
pub use error::CliError;
