use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid token: {0}")]
    InvalidToken(String),

    #[error("n-gram order must be at least 1")]
    ZeroOrder,

    #[error("geometric mean of an empty list")]
    EmptyMean,

    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("table parse error at byte {offset}: {message}")]
    TableParse { offset: usize, message: String },

    #[error("table record {index} has an empty value")]
    EmptyValue { index: usize },

    #[error("table has no records")]
    EmptyTable,

    #[error("reference is empty")]
    EmptyReference,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("id mismatch: missing {missing:?}, unexpected {extra:?}")]
    IdMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("separator {sep:?} occurs in {what}")]
    SeparatorCollision { sep: String, what: String },

    #[error("pipeline stage error: {0}")]
    Stage(String),

    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
