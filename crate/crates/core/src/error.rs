use crate::graph::NodeRef;

/// Errors from reading or writing the canonical tabular text format.
#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}, column {column}: {msg}")]
    Cell {
        line: usize,
        column: String,
        msg: String,
    },
}

/// Errors from graph loading, validation, and adjacency access.
#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeRef),
    #[error(transparent)]
    Table(#[from] TableError),
}
