//! Command-line pipeline around `taskgap_core`.

pub mod app;
pub mod config;
pub mod pipeline;

pub use app::{run_cli, Cli, Command};
pub use config::RunConfig;
