//! Experiment harness: configuration, the named experiments and their reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, RunError};
pub use report::{write_results, Check, Report, ResultRow, Summary};

/// Process exit statuses of the `proxgen` binary.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const THRESHOLD_FAILED: i32 = 1;
    pub const INVALID_CONFIG: i32 = 2;
    pub const RUNTIME_ERROR: i32 = 3;
}
