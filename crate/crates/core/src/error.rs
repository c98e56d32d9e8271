use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("no entry for method `{method}` and relation {mr}")]
    MissingReport { method: String, mr: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed JSON: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: schema violation at `{at}`: {message}", path.display())]
    Schema {
        path: PathBuf,
        at: String,
        message: String,
    },

    #[error("{}: unsupported schema version `{found}` (expected `{expected}`)", path.display())]
    SchemaVersion {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("failed to start external program `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot serialize artifact: {0}")]
    Serialize(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
