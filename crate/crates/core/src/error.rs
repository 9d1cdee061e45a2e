use std::path::PathBuf;

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Reading or writing files, including malformed input files.
    Io,
    /// The pipeline itself could not proceed on the given data.
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {reason}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{}: duplicate document id {id:?}", path.display())]
    DuplicateId { path: PathBuf, id: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("document {0:?} has no weighted mass")]
    EmptyDocument(String),

    #[error("out-of-vocabulary document")]
    OutOfVocabulary,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0}")]
    Numerical(String),

    #[error("model format: {0}")]
    Format(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::DuplicateId { .. }
            | Error::Format(_) => ErrorKind::Io,
            Error::Config(_) => ErrorKind::Usage,
            Error::EmptyCorpus(_)
            | Error::EmptyDocument(_)
            | Error::OutOfVocabulary
            | Error::DimensionMismatch(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
