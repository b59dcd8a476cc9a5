use std::fmt;
use std::process::ExitCode;

use bgsfuse::combine::CombineError;
use bgsfuse::corpus::CorpusError;
use bgsfuse::geometry::GeometryError;
use bgsfuse::histogram::{CacheError, HistogramError};
use bgsfuse::metrics::MetricsError;
use bgsfuse::search::SearchError;

/// Command failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration: exit 2.
    Config(String),
    /// Unreadable or inconsistent input data: exit 3.
    Data(String),
    /// A computed object broke one of its invariants: exit 4.
    Invariant(String),
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn invariant(msg: impl fmt::Display) -> Self {
        CliError::Invariant(msg.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Invariant(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidSpec(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<HistogramError> for CliError {
    fn from(e: HistogramError) -> Self {
        CliError::data(e)
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::data(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::data(e)
    }
}

impl From<CombineError> for CliError {
    fn from(e: CombineError) -> Self {
        match e {
            CombineError::Format(_) | CombineError::LengthMismatch { .. } | CombineError::OutOfUnitRange { .. } => {
                CliError::config(e)
            }
            _ => CliError::data(e),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Metrics(m) => m.into(),
            other => CliError::invariant(other),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::UnknownStrategy(_)
            | SearchError::InvalidSelection { .. }
            | SearchError::KMax { .. }
            | SearchError::Workers => CliError::config(e),
            SearchError::Metrics(m) => m.into(),
            _ => CliError::data(e),
        }
    }
}

/// I/O failure on a named path; always a data error.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
