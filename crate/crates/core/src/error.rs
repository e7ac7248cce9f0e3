use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        value: String,
    },

    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("column {column} requested but the table has {available} columns")]
    MissingColumn { column: usize, available: usize },

    #[error("need at least 2 elements, found {0}")]
    TooFewElements(usize),

    #[error(
        "square table with zero diagonal is not symmetric: d[{i}][{j}]={a} but d[{j}][{i}]={b}"
    )]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite value {value} at row {row}, column {column}")]
    NonFinite { row: usize, column: usize, value: f64 },

    #[error("matrix file format error: {0}")]
    Format(String),

    #[error("matrix file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("stencil half-width {half_width} is too large for {n} elements")]
    StencilTooLarge { n: usize, half_width: usize },

    #[error("label sequences differ in length: {truth} vs {predicted}")]
    LengthMismatch { truth: usize, predicted: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("cluster id {id} does not exist ({available} clusters)")]
    UnknownCluster { id: usize, available: usize },

    #[error("`{command}` needs stage {required} but the session is at {current}")]
    StageConflict {
        command: &'static str,
        required: &'static str,
        current: &'static str,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
