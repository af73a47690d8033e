//! Scenario loading, command dispatch and report emission for barrierkit.

// `!(a >= b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod report;
pub mod scenario;

pub use commands::{run, Artifact, CliError, Command, Outcome, RunOptions};
pub use report::Report;
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioErrors};
