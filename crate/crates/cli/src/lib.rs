//! Scenario files and the runner behind the `morse` binary.

pub mod config;
pub mod runner;

pub use config::{parse_batch, ScenarioConfig, Tolerances};
pub use runner::{run_batch, run_scenario, RunOptions, RunReport};
