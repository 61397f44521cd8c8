use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("element distance {distance_m:e} m is below the 1e-9 m floor")]
    ZeroDistance { distance_m: f64 },

    #[error("wavenumber support is empty")]
    EmptySupport,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("stream pair ({row}, {col}) out of range for a {rows}x{cols} wavenumber channel")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("{streams} streams exceed the configured RF chains ({tx} tx, {rx} rx)")]
    RfChainLimit { streams: usize, tx: usize, rx: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("keystone check failed: effective channel deviates from H_a by {0:e}")]
    Keystone(f64),

    #[error("point exceeded its wall-clock budget")]
    Timeout,

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
