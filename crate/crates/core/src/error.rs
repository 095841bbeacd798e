use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MbError {
    /// Parameters or inputs outside the documented domain.
    #[error("invalid input: {0}")]
    Domain(String),
    /// An iterative method failed to reach its target.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// The computation was refused because its result could not be trusted.
    #[error("refused: {0}")]
    Refused(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MbError>;

impl From<std::io::Error> for MbError {
    fn from(e: std::io::Error) -> Self {
        MbError::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(MbError::Domain(msg.into()))
}
