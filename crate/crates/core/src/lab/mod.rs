//! Experiment harness: configuration, runs, analysis and reports.

pub mod analysis;
pub mod config;
pub mod criteria;
pub mod experiments;
pub mod output;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, parse_config_with_overrides, ExperimentConfig, ExperimentName, InitialData};
pub use criteria::Criterion;
pub use experiments::{run_experiment, ExperimentReport};
