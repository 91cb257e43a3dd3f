use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("incompatible units: cannot convert {from} to {to}")]
    IncompatibleUnits { from: String, to: String },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("unstable time step: {0}")]
    Unstable(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{fraction:.3e} of the image power would leave the grid (limit {limit:.1e}); pad the image")]
    PowerLeak { fraction: f64, limit: f64 },

    #[error("contrast undefined: bright and dark samples are both zero")]
    UndefinedContrast,

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("malformed {kind} file {path}: {reason}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("{0}")]
    NoData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
