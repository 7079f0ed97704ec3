use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("graph is not a tree")]
    NotATree,
    #[error("map is not a homomorphism")]
    NotHomomorphism,
    #[error("map is not an epimorphism")]
    NotEpimorphism,
    #[error("map carries no roots")]
    NotRooted,
    #[error("graphs do not match: {0}")]
    MismatchedGraphs(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("search budget exceeded ({0})")]
    BudgetExceeded(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
