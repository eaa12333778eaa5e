use std::path::PathBuf;

use thiserror::Error;

use crate::correlator::CorrelatorError;
use crate::frontend::FrontendError;
use crate::fzc::FzcError;
use crate::metrics::{AdviceError, MetricsError, MonteCarloError};
use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("sidecar declares {sidecar} samples but the payload holds {payload}")]
    MetadataMismatch { sidecar: u64, payload: u64 },
    #[error("result table is empty")]
    EmptyResult,
    #[error(transparent)]
    Waveform(#[from] FzcError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error(transparent)]
    Advice(#[from] AdviceError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

impl HarnessError {
    pub fn validation(msg: impl Into<String>) -> Self {
        HarnessError::Validation(vec![msg.into()])
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime or numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Io { .. } | HarnessError::Format(_) | HarnessError::MetadataMismatch { .. } => 3,
            HarnessError::MonteCarlo(MonteCarloError::InvalidSpec(_)) => 1,
            HarnessError::Frontend(FrontendError::InvalidReceiver(_)) => 1,
            HarnessError::Advice(AdviceError::InvalidScenario(_)) => 1,
            HarnessError::Waveform(FzcError::InvalidRange { .. } | FzcError::NotCoprime { .. }) => 1,
            _ => 2,
        }
    }
}
