use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("input error: {0}")]
    Input(String),
    /// A model invariant does not hold.
    #[error("model error: {0}")]
    Model(String),
    /// One or more verification checks exceeded their tolerance.
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Model(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<dcform_core::Error> for CliError {
    fn from(e: dcform_core::Error) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
