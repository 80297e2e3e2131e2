use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("experiment exceeds work budget: {requested} > {budget}")]
    Budget { requested: u128, budget: u128 },
    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
