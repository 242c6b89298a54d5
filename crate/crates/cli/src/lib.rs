//! Configuration-driven experiments for the `vfrecon` estimator.
//!
//! Every command reads a TOML [`ExperimentConfig`](config::ExperimentConfig)
//! and writes CSV files whose first line is `# config-hash: <sha256>`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::CliError;
