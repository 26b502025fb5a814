//! Experiment configuration, runners and reports.

pub mod config;
pub mod report;
pub mod run;
pub mod scaling;
pub mod tails;

pub use config::{Experiment, ExperimentConfig};
pub use report::{ExperimentReport, Status, Table, Verdict};
pub use run::{compute_report, run_experiment};
