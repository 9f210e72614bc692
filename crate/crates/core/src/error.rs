//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A geographic coordinate fell outside the scene extent.
    #[error("{axis} {value} outside extent [{min}, {max}]")]
    OutOfExtent {
        axis: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A scalar failed a domain check (non-finite, out of range).
    #[error("invalid {what}: {detail}")]
    InvalidValue { what: &'static str, detail: String },

    /// A configuration struct violated one of its invariants.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Grid shapes or indices do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A text input (GeoJSON, CSV, run config) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A binary file had the wrong magic string.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },

    /// A binary file ended before its declared payload.
    #[error("truncated {what}: expected {expected} bytes, found {found}")]
    Truncated {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// A binary file's header disagrees with its payload or with the caller.
    #[error("format mismatch: {0}")]
    FormatMismatch(String),

    /// Not enough candidate points to draw the requested masks.
    #[error("insufficient points: need {need}, have {have}")]
    InsufficientPoints { need: usize, have: usize },

    /// No measurements fell inside the requested frequency band.
    #[error("no measurements in band [{lo_mhz}, {hi_mhz}] MHz")]
    EmptyBand { lo_mhz: f64, hi_mhz: f64 },

    /// A numeric routine produced a non-finite value.
    #[error("numeric divergence: {0}")]
    NonFinite(String),

    /// Two evaluation reports cannot be compared.
    #[error("reports not comparable: {0}")]
    NotComparable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numeric core (divergence, non-finite loss),
    /// as opposed to bad inputs. The CLI maps these to a distinct exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
