use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON{}: {source}", .context.as_deref().map(|c| format!(" in {c}")).unwrap_or_default())]
    Json {
        context: Option<String>,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV schema error: {0}")]
    Schema(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("similarity undefined: both embeddings are zero vectors")]
    UndefinedSimilarity,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("provider `{provider}` failed: {message}")]
    Provider {
        provider: String,
        message: String,
        transient: bool,
    },

    #[error("unparseable verdict from provider: {0:?}")]
    UnparseableVerdict(String),

    #[error("missing code embedding for function {0}")]
    MissingEmbedding(String),

    #[error("review: {0}")]
    Review(#[from] crate::review::ReviewError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: Some(context.into()),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(source: serde_json::Error) -> Self {
        Error::Json {
            context: None,
            source,
        }
    }
}
