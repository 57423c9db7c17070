//! Scenario files, the simulation loop, trace I/O and the command-line
//! front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod cli;
pub mod config;
pub mod runner;
pub mod trace;

pub use batch::{compare, compare_runs, sweep, SweepRow};
pub use config::{ConfigError, ScenarioConfig};
pub use runner::{run_scenario, run_scenario_with_sink, RunError, RunOutput, StepRecord, TraceSink};
