use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("shape mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    ShapeMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("sample ({x}, {y}) lies more than one pixel outside a {width}x{height} grid")]
    OutOfRange {
        x: isize,
        y: isize,
        width: usize,
        height: usize,
    },

    #[error("membership value {0} outside [0, 1]")]
    Domain(f64),

    #[error("template configuration: {0}")]
    Templates(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numerical blow-up at iteration {iteration}, pixel ({x}, {y}): value {value}")]
    NumericalBlowup {
        iteration: usize,
        x: usize,
        y: usize,
        value: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(name: &'static str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::param(name, format!("expected {expected} values, got {got}")));
    }
    Ok(())
}
