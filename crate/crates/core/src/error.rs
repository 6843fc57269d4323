use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::AnnotatedTriplet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON at line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing required field `{field}` at line {line}")]
    MissingField { line: usize, field: &'static str },

    #[error("{what} at line {line}")]
    InvalidRecord { line: usize, what: String },

    #[error("duplicate id {id} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("empty retrieval set at line {line}")]
    EmptyRetrieval { line: usize },

    #[error("no joinable examples")]
    NoJoinableExamples,

    #[error("unknown label token {token:?} at line {line}")]
    UnknownLabel { line: usize, token: String },

    #[error("label exceeds N ({label} > {max_n}) at line {line}")]
    LabelExceedsN {
        line: usize,
        label: usize,
        max_n: usize,
    },

    #[error("k = {k} out of range 0..={max}")]
    OutOfRange { k: usize, max: usize },

    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("protocol error (status {status}): {message}")]
    Protocol { status: u16, message: String },

    #[error("model incompatible with feature layout: model {model}, features {features}")]
    IncompatibleModel { model: String, features: String },

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("annotation aborted: {failed} of {total} examples failed (limit {limit:.1}%)")]
    AnnotationAborted {
        failed: usize,
        total: usize,
        limit: f64,
        partial: Vec<AnnotatedTriplet>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
