use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite distribution values after substep {substep}")]
    NonFiniteField { substep: u64 },

    #[error("probe {index} at ({x}, {y}) lies inside the obstacle")]
    ProbeInSolid { index: usize, x: usize, y: usize },

    #[error("shape mismatch: {what} (expected {expected}, got {actual})")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("no vortex shedding detected: lift amplitude {amplitude:.3e} below threshold")]
    NoSheddingDetected { amplitude: f64 },

    #[error("window (n = {n}, m = {m}) does not fit trajectories of length T = {horizon}")]
    WindowTooLong { n: usize, m: usize, horizon: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite training loss at epoch {epoch} (last finite loss {last_finite:.6e})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },

    #[error("series of length {len} is shorter than the required {required}")]
    TooShort { len: usize, required: usize },

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("invalid configuration: `{key}` {constraint}")]
    ConstraintViolation { key: String, constraint: String },

    #[error("invalid configuration: unknown key `{0}`")]
    UnknownKey(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("bad file format in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::ShapeMismatch {
            what,
            expected,
            actual,
        }
    }

    pub(crate) fn constraint(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::ConstraintViolation {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            reason: reason.into(),
        }
    }
}
