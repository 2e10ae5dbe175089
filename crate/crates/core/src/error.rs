use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series did not converge within {terms} terms (last increment {last_increment:e})")]
    Truncation { terms: usize, last_increment: f64 },

    #[error("kernel series reached degree cap {degree} with tail bound {tail_bound:e}")]
    KernelTruncation { degree: usize, tail_bound: f64 },

    #[error("non-finite integrand value at node {index} {coords:?}")]
    Evaluation { index: usize, coords: Vec<f64> },

    #[error("rule format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
