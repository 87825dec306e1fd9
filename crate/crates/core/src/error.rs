use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The road network description references something that does not exist
    /// or breaks a structural rule.
    #[error("structural error in road network: {0}")]
    Structural(String),

    #[error("invalid flow schedule: {0}")]
    InvalidFlow(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    /// A caller broke an operation's preconditions (bad action index,
    /// unknown lane, wrong number of actions, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty scenario: no vehicles were spawned")]
    EmptyScenario,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::InvalidFlow(_) => "invalid_flow",
            Error::Parse { .. } => "parse",
            Error::FormatVersion { .. } => "format_version",
            Error::Contract(_) => "contract",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::EmptyScenario => "empty_scenario",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
