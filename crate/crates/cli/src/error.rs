use soliclone_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PREREQUISITE: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    /// An input artifact of an earlier stage is missing or stale.
    #[error("{0}")]
    Prerequisite(String),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn missing(what: &std::path::Path, stage: &str) -> Self {
        CliError::Prerequisite(format!("{} not found: run `{stage}` first", what.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Prerequisite(_) => EXIT_PREREQUISITE,
            CliError::Provider(_) => EXIT_PROVIDER,
            CliError::Core(CoreError::Provider { .. } | CoreError::UnparseableVerdict(_)) => {
                EXIT_PROVIDER
            }
            CliError::Core(CoreError::InvalidArgument(_)) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Other(_) => EXIT_FAILURE,
        }
    }
}
