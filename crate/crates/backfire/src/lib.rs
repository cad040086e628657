//! Command-line front end, configuration and file formats for
//! [`backfire_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod driver;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;

pub use backfire_core as core;
pub use config::{Overrides, Run, RunConfig};
pub use error::{CliError, Result};
