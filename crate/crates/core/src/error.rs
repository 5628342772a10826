use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("unsupported image encoding in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("mask is empty: {0}")]
    EmptyMask(String),

    #[error("probability map is identically zero inside the refinement window")]
    DegenerateUnary,

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("ground-truth mask required: {0}")]
    MissingGroundTruth(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
