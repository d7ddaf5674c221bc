use std::path::PathBuf;

use thiserror::Error;

use crate::model::Frame;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("detections span several frames ({expected} and {found}) where one frame was required")]
    MixedFrames { expected: Frame, found: Frame },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: unknown class `{token}`")]
    UnknownClass {
        path: PathBuf,
        line: u64,
        token: String,
    },

    #[error("{path}: instance {id} is labeled both `{first}` and `{second}`")]
    ClassConflict {
        path: PathBuf,
        id: u64,
        first: String,
        second: String,
    },

    #[error("{path}: instance {id} has two records at frame {frame}")]
    DuplicateRecord { path: PathBuf, id: u64, frame: Frame },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
