//! Command-line harness for `dedq-core`: TOML configuration, CSV output,
//! and the convergence experiments.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
