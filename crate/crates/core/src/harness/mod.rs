//! File formats, synthetic data and the command implementations behind the CLI.

mod commands;
mod loss_log;
mod report;
mod synth;
mod table;

pub use commands::{cmd_apply, cmd_fit, cmd_plan, cmd_table, curve_csv, params_from_report};
pub use loss_log::{load_loss_log, LogFormat, LossLog};
pub use report::{ApplySummary, FitReport, PlanReport, ReportDocument, REPORT_VERSION};
pub use synth::{frame_sweep, generate_synthetic, joint_grid, token_sweep};
pub use table::{
    format_2dp, load_scores, parse_scores, round_2dp, summarize_table, BenchmarkRow, Score,
    TableReport, TableRow,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::allocator::AllocError;
use crate::context_ops::interchange::InterchangeError;
use crate::context_ops::OpError;
use crate::scaling_fit::FitError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },
    #[error("validation: {0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Tensor {
        context: String,
        source: InterchangeError,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Op(#[from] OpError),
}

impl HarnessError {
    /// Process exit code: 2 usage, 3 data/validation, 4 numerical domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Fit(FitError::Domain { .. }) => 4,
            HarnessError::Alloc(AllocError::FormulaDomain { .. } | AllocError::Domain { .. }) => 4,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
