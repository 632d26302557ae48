//! Batch driver for the `qkansatz` checks: JSON configuration, seeded
//! sampling and residual reports.

pub mod config;
pub mod report;
pub mod run;
pub mod sampling;

pub use config::{Overrides, RunConfig, Subcommand, UsageError};
pub use report::Report;
pub use run::{run, run_timed, run_with, Registry, RunError};
