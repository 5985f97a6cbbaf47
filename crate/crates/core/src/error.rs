use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no candidate regions")]
    NoRegions,

    #[error("empty mask: similarity is undefined for a region of area 0")]
    EmptyMask,

    #[error("degenerate ground truth: needs at least one positive and one negative pixel")]
    DegenerateGroundTruth,

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("duplicate image_id `{0}` in manifest")]
    DuplicateId(String),

    #[error("image `{image_id}`: cannot read {path}")]
    MissingFile { image_id: String, path: PathBuf },

    #[error("config: {0}")]
    Config(String),

    #[error("infeasible synthetic geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("image `{image_id}`, stage `{stage}`: {source}")]
    Stage {
        image_id: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_stage(self, image_id: &str, stage: &'static str) -> Self {
        Error::Stage {
            image_id: image_id.to_owned(),
            stage,
            source: Box::new(self),
        }
    }
}
