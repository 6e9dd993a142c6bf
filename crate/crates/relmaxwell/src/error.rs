use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("orientation inconsistency: {0}")]
    Orientation(String),

    #[error("dangling face: {0}")]
    DanglingFace(String),

    #[error("non-manifold obstacle boundary: {0}")]
    NonManifold(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("material error: {0}")]
    Material(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("factorisation failed: {0}")]
    Factorisation(String),

    #[error("spectral error: {0}")]
    Spectral(String),

    #[error("integer overflow during exact elimination")]
    Overflow,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
