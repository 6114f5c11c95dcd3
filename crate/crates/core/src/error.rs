use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("user {user_id}: need {needed} negative candidates but only {available} available")]
    InsufficientNegatives {
        user_id: String,
        needed: usize,
        available: usize,
    },

    #[error("singular linear system of size {0}")]
    SingularSystem(usize),

    #[error("non-finite objective or gradient at step {step} (value {value})")]
    NonFinite {
        step: usize,
        value: f64,
        point: Vec<f64>,
    },

    #[error("user {user_id}: {source}")]
    User {
        user_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("vocabulary fingerprint mismatch: model {model}, data {data}")]
    FingerprintMismatch { model: String, data: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn for_user(self, user_id: &str) -> Self {
        Error::User {
            user_id: user_id.to_string(),
            source: Box::new(self),
        }
    }

    /// True when the failure came from floating point trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::SingularSystem(_) => true,
            Error::User { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
