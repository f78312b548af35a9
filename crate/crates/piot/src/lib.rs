//! File formats, parallel chain orchestration and the `piot` command line.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod plotdata;
pub mod report;
pub mod runner;
pub mod trace;

pub use error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
