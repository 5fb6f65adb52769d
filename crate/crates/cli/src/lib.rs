//! Batch runner for hgibbs experiments: flat config files, a typed
//! experiment registry, and CSV or json-lines reports.

pub mod config;
pub mod output;
pub mod registry;
pub mod runner;

pub use config::{emit_default_config, parse_config, ConfigError, ConfigErrors, OutputFormat, RunConfig};
pub use runner::{execute, run, RunError, OUTPUT_DIR_ENV};
