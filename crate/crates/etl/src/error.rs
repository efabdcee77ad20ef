use giglite_core::{GraphError, TableError};

#[derive(Debug, thiserror::Error)]
pub enum EtlError {
    #[error("config error: {0}")]
    Config(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {msg}")]
    Record { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
