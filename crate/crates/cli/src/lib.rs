//! Command-line pipeline and HTTP server for the prediction service.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

pub use config::Config;
pub use error::{CliError, ExitCode};
