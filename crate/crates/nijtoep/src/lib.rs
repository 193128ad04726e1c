//! File formats, parallel batches and the command pipelines around
//! `nijtoep-core`.

pub mod commands;
pub mod config;
pub mod parallel;
pub mod report;

pub use commands::{check, generate, transform, CommandError, Outcome};
pub use config::{Config, ConfigError, Overrides};
