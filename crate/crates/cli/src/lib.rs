//! Experiment runner for day-ahead hourly pricing studies.
//!
//! Reads a TOML config, loads or synthesizes hourly weather and wholesale
//! prices, runs one of the `pareto`, `benchmarks`, `renewable`, `storage`
//! or `simulate` experiments and writes CSV results with a run manifest.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod output;
pub mod synthetic;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult, ErrorKind};
pub use experiment::{run, Command, RunOptions, RunSummary};
