use std::path::PathBuf;

/// Errors surfaced by the scene engine.
///
/// File-level variants carry the offending path and, where it applies, the
/// pixel location so that a bad bundle can be fixed without guesswork.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: missing file")]
    MissingFile { path: PathBuf },

    #[error("{path}: malformed {format}: {reason}")]
    Malformed {
        path: PathBuf,
        format: &'static str,
        reason: String,
    },

    #[error("{path}: truncated {format} payload (expected {expected} bytes, found {found})")]
    Truncated {
        path: PathBuf,
        format: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what}: dimension mismatch (expected {expected:?}, found {found:?})")]
    DimensionMismatch {
        what: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{what}: non-positive depth {value} at ({x}, {y})")]
    NonPositiveDepth {
        what: String,
        x: usize,
        y: usize,
        value: f32,
    },

    #[error("{what}: non-finite sample at ({x}, {y}), channel {channel}")]
    NonFinite {
        what: String,
        x: usize,
        y: usize,
        channel: usize,
    },

    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("uncovered pixel ({x}, {y}) in overlay from layer {from_layer}")]
    UncoveredPixel {
        x: usize,
        y: usize,
        from_layer: usize,
    },

    #[error("layer count mismatch: expected {expected}, found {found}")]
    LayerCountMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("png codec: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path }
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        format: &'static str,
        reason: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            path: path.into(),
            format,
            reason: reason.into(),
        }
    }
}
