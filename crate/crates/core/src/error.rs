use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: both must be at least 2")]
    InvalidDimensions { width: usize, height: usize },

    #[error("data length {len} does not match {width}x{height}")]
    LengthMismatch { len: usize, width: usize, height: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no valid pixels to evaluate")]
    EmptyMask,

    #[error("ground truth is not strictly positive at pixel ({x}, {y})")]
    NonPositiveGroundTruth { x: usize, y: usize },

    #[error("all directional differences are zero; kappa is undefined")]
    DegenerateKappa,

    #[error("weight array of length {weights} cannot cover a history of {history} differences")]
    WeightsTooShort { weights: usize, history: usize },

    #[error("patch at ({x0}, {y0}) with extents {m}x{n} leaves the {width}x{height} domain")]
    PatchOutOfBounds { x0: usize, y0: usize, m: usize, n: usize, width: usize, height: usize },

    #[error("non-finite values appeared at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
