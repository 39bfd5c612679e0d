use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented precondition or invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file could be read but its contents are malformed.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },

    /// No similarity track is available for a (video, sub-event) pair.
    #[error("no track for video `{video_id}` and sub-event `{description}` under {}", dir.display())]
    MissingTrack {
        dir: PathBuf,
        video_id: String,
        description: String,
    },

    /// An invariant the code itself is responsible for was broken.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            err: source,
        }
    }

    /// True when the error stems from bad user input rather than a bug.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
