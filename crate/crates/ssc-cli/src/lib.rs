//! Command-line front end for the subspace-clustering library: dataset
//! generation, single clustering runs, parameter sweeps, closed-form
//! bound evaluation, and the neighbor-quality demo, all emitting CSV and
//! self-contained SVG.
//!
//! Every command is deterministic given its configuration and seed, and
//! output bytes do not depend on the worker thread count.

pub mod chart;
pub mod commands;
pub mod config;
pub mod exp;
pub mod io;

use thiserror::Error;

/// Top-level failure classes, mapped onto process exit codes: bad input
/// (flags, config files, input data, parameter domains) exits 2, failures
/// during computation or output exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ssc_core::datagen::DatagenError> for CliError {
    fn from(e: ssc_core::datagen::DatagenError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ssc_core::bounds::BoundsError> for CliError {
    fn from(e: ssc_core::bounds::BoundsError) -> Self {
        CliError::Config(e.to_string())
    }
}
