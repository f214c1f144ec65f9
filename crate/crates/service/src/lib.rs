//! Command line and HTTP front ends for running algorithm searches.

pub mod api;
pub mod cli;
pub mod config;
pub mod manager;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use manager::{ApiError, RunHandle, RunManager, RunState};
