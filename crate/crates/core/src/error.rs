use thiserror::Error;

/// Errors raised by the estimators, simulators and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an argument that violates an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Every eigenvalue of the Gram matrix fell below the retention floor.
    #[error("degenerate kernel (eps = {eps}): no eigenvalue above the floor")]
    DegenerateKernel { eps: f64 },

    /// No configuration of a tuning grid could be fitted.
    #[error("model selection failed for every grid point: {}", .0.join("; "))]
    SelectionFailed(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed tabular data; row and column are 1-based as they appear in the file.
    #[error("data error at row {row}, column {column}: {message}")]
    Data {
        row: usize,
        column: String,
        message: String,
    },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model file version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: String, supported: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
