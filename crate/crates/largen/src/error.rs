use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid config at `{key}`: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("statistics: {0}")]
    Statistics(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
