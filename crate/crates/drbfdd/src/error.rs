//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("{op}: output size ({size} + 2*{pad} - {kernel}) is not divisible by stride {stride}")]
    NonExactOutputSize {
        op: &'static str,
        size: usize,
        pad: usize,
        kernel: usize,
        stride: usize,
    },

    #[error("maxpool: spatial dimension {dim} is not divisible by window {window}")]
    NonDivisiblePool { dim: usize, window: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("k-means needs at least k points: got {points} points for k={k}")]
    TooFewPoints { points: usize, k: usize },

    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}")]
    NumericAbort { epoch: usize, batch: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("{path}: {detail}")]
    MalformedData { path: String, detail: String },

    #[error("label {label} not present in {source}")]
    UnknownLabel { label: String, source: String },

    #[error("config error at {path}:{line}: {detail}")]
    Config {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("corrupt model file {path}: {detail}")]
    CorruptModel { path: String, detail: String },

    #[error("roc_auc needs both classes present, got {0} only")]
    SingleClass(&'static str),

    #[error("evaluation failed at iteration {iteration}: {source}")]
    EvalIteration {
        iteration: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config { .. } | Error::InvalidArgument(_) => 1,
            Error::NumericAbort { .. } => 3,
            Error::EvalIteration { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
