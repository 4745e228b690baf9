use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Scope, cardinality or graph inconsistencies.
    #[error("structural error: {0}")]
    Structure(String),

    /// A model, structure or evidence that is well-formed but semantically invalid.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid options: {0}")]
    Options(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}
