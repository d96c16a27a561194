use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoretError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error (line {line}): {message}")]
    SchemaParse { line: usize, message: String },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("header is missing required column `{0}`")]
    MissingColumn(String),
    #[error("no response column declared")]
    NoResponse,
    #[error("derivation `{target}`: {message}")]
    Derivation { target: String, message: String },
    #[error("invalid model schema `{input}`: {message}")]
    ModelSchema { input: String, message: String },
    #[error("empty data")]
    EmptyData,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("labels contain a single class; AUC is undefined")]
    SingleClass,
    #[error("bootstrap fold {fold} has an empty out-of-bag set")]
    EmptyOob { fold: usize },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LoretError>;

impl LoretError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LoretError::Io {
            path: path.into(),
            source,
        }
    }
}
