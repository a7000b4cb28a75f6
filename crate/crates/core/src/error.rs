use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation received no usable data (empty mask, no common valid pixels, empty pair set).
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// The input is formally valid but degenerate for the requested operation
    /// (constant depth map for min-max normalization, rank-deficient alignment).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The distortion objective could not be evaluated (no planar segments found).
    #[error("objective undefined: {0}")]
    ObjectiveUndefined(String),

    /// Shift/focal recovery failed across the whole search grid.
    #[error("recovery failed: {0}")]
    RecoveryFailed(String),

    /// A file did not match the expected on-disk format.
    #[error("format error in {path}: {message} (byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
