use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{origin}: cannot parse scenario: {message}")]
    Parse { origin: String, message: String },
    /// Validation failure, with the dotted path of the offending field.
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("no bundled scenario matches '{query}'; candidates: {}", candidates.join(", "))]
    UnknownScenario { query: String, candidates: Vec<String> },
    #[error("scenario '{name}' is a {actual} experiment, not {requested}")]
    WrongExperiment {
        name: String,
        actual: String,
        requested: String,
    },
    #[error(transparent)]
    Core(#[from] wavebench_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn invalid<T>(field: &str, message: &str) -> Result<T> {
    Err(HarnessError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    })
}
