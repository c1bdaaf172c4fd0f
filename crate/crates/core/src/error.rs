use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value exceeds the range covered by a tabulation or configuration.
    #[error("range error: {0}")]
    Range(String),
    /// A caller-side precondition was not met (e.g. a tube too short for the horizon).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A numerical contract refused the request, such as an unstable time step.
    #[error("numeric contract violated: {0}")]
    NumericContract(String),
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
