//! Reproducible experiments over grids of `(alpha, N)` cells: config
//! parsing, runners and report emission.

pub mod config;
pub mod experiments;
pub mod report;

use thiserror::Error;

use crate::sequence::SequenceError;
use crate::stats::StatsError;

pub use config::{
    parse_config, parse_config_str, ExperimentConfig, ExperimentKind, LSchedule, OutputFormat,
};
pub use experiments::{
    run_clt, run_experiment, run_oracle, run_oracle_with, run_thm1, run_thm2, OracleReferences,
};
pub use report::{emit_report, ExperimentReport, Record, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// `line` is 1-based; 0 refers to the file as a whole.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Process exit code for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

fn sequence_exit_code(e: &SequenceError) -> i32 {
    match e {
        SequenceError::PrecisionExhausted { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

impl HarnessError {
    /// 2 for configuration problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Validation(_) => EXIT_CONFIG,
            HarnessError::Io { .. } | HarnessError::Serialize(_) => EXIT_IO,
            HarnessError::Sequence(e) => sequence_exit_code(e),
            HarnessError::Stats(StatsError::Sequence(e)) => sequence_exit_code(e),
            HarnessError::Stats(
                StatsError::DegenerateWindow(_)
                | StatsError::WindowTooWide(_)
                | StatsError::InvalidArgument(_)
                | StatsError::PointCountMismatch { .. },
            ) => EXIT_CONFIG,
            HarnessError::Stats(_) => EXIT_NUMERICAL,
        }
    }
}
