//! Config-driven runner: simulate, check and audit the registered models.

pub mod config;
pub mod run;

pub use config::{ConfigError, Mode, RunConfig};
pub use run::{list_models, run, RunError};
