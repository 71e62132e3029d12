//! Command-line front end for the `otfs-core` link simulator: TOML
//! configuration, parallel trial execution, CSV results and SVG plots.

pub mod config;
pub mod output;
pub mod pilots;
pub mod run;

pub use config::{Config, ConfigError};
