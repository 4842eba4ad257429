use std::fmt;

/// Errors surfaced by graph construction, estimators, and training.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An edge endpoint is outside `[0, num_nodes)`.
    EdgeOutOfRange {
        source: usize,
        target: usize,
        num_nodes: usize,
    },
    /// Two objects that must agree on a dimension do not.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A value that must be finite is NaN or infinite.
    NonFinite { context: &'static str },
    /// Labels cannot support the requested computation
    /// (e.g. fewer than two classes present).
    DegenerateLabels(String),
    /// A configuration value is outside its documented range.
    InvalidConfig(String),
    /// Input data failed validation.
    InvalidInput(String),
    /// Training produced a non-finite loss.
    Diverged { epoch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EdgeOutOfRange {
                source,
                target,
                num_nodes,
            } => write!(
                f,
                "edge ({source}, {target}) out of range for {num_nodes} nodes"
            ),
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(f, "{context}: expected {expected}, found {found}"),
            Error::NonFinite { context } => write!(f, "{context}: non-finite value"),
            Error::DegenerateLabels(msg) => write!(f, "degenerate labels: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Diverged { epoch } => write!(f, "training diverged at epoch {epoch}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
