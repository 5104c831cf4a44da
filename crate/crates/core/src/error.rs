use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {malformed} of {total} lines malformed (limit 1%); first: line {first_line}: {first_reason}")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },

    #[error("mapped column `{column}` (for `{field}`) not found in {path}")]
    MissingColumn {
        field: String,
        column: String,
        path: PathBuf,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("empty vocabulary after applying document-frequency threshold {0}")]
    EmptyVocabulary(usize),

    #[error("evaluation stream spans {have} hours but at least {need} are required")]
    StreamTooShort { have: i64, need: i64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
