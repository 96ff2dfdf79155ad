use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("{record}: {reason}")]
    Validation { record: String, reason: String },

    #[error("{0}")]
    Format(String),

    #[error("payload has {actual} bytes, expected {expected}")]
    Truncation { expected: usize, actual: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("{0}")]
    Domain(String),

    #[error("frame sets differ: {0}")]
    FrameMismatch(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("image is {width}x{height}, needs at least {min}x{min}")]
    Size { width: u32, height: u32, min: u32 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("image side {side} is below the {min}-pixel window")]
    TooSmall { side: u32, min: u32 },

    #[error("feature dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("scene `{0}` has no image pairs")]
    EmptyScene(String),

    #[error("baseline method `{0}` not found")]
    MissingBaseline(String),

    #[error("{0}")]
    EmptyInput(String),

    #[error("image `{path}`: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
            Error::Format(_) => "FormatError",
            Error::Truncation { .. } => "TruncationError",
            Error::UnknownClass(_) => "UnknownClassError",
            Error::Domain(_) => "DomainError",
            Error::FrameMismatch(_) => "FrameMismatchError",
            Error::Degenerate(_) => "DegenerateError",
            Error::Size { .. } => "SizeError",
            Error::ShapeMismatch(_) => "ShapeMismatchError",
            Error::TooSmall { .. } => "TooSmallError",
            Error::DimMismatch(..) => "DimMismatchError",
            Error::InsufficientSamples { .. } => "InsufficientSamplesError",
            Error::EmptyScene(_) => "EmptySceneError",
            Error::MissingBaseline(_) => "MissingBaselineError",
            Error::EmptyInput(_) => "EmptyInputError",
            Error::Image { .. } => "ImageError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(record: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            record: record.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
