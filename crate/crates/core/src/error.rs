use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Processing stage of the end-to-end pipeline, used to tag propagated errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Correlation,
    Whitening,
    FilterExtraction,
    Deconvolution,
    Spectrum,
    Reconstruction,
    Envelope,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Correlation => "correlation",
            Stage::Whitening => "whitening",
            Stage::FilterExtraction => "filter-extraction",
            Stage::Deconvolution => "deconvolution",
            Stage::Spectrum => "spectrum",
            Stage::Reconstruction => "reconstruction",
            Stage::Envelope => "envelope",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("signal must contain at least one sample")]
    EmptySignal,

    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),

    #[error("an envelope must contain at least one component")]
    EmptyEnvelope,

    #[error("envelope component {index}: {reason}")]
    InvalidComponent { index: usize, reason: String },

    #[error("transfer function is invalid: {0}")]
    InvalidTransferFunction(String),

    #[error("filter order must be odd, got {0}")]
    EvenOrder(usize),

    #[error("filter order {order} exceeds signal length {len}")]
    OrderExceedsLength { order: usize, len: usize },

    #[error("signal too short: need at least {required} samples, got {len}")]
    TooShort { required: usize, len: usize },

    #[error("matrix not positive (degenerate signal)")]
    NotPositive,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("frame longer than signal ({frame} > {len})")]
    FrameTooLong { frame: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero total variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("noise variance must be non-negative, got {0}")]
    NegativeNoiseVariance(f64),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// The pipeline stage that produced this error, if it was tagged with one.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The innermost error with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
