use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("solution is incomplete: {0} customers are still in the pool")]
    IncompleteSolution(usize),

    #[error("unknown customer id {0}")]
    UnknownCustomer(usize),

    #[error("customer {0} is already in the pool")]
    AlreadyRemoved(usize),

    #[error("customer {0} is not visited by any route")]
    NotVisited(usize),

    #[error("customer {0} cannot be served even by a dedicated vehicle")]
    InfeasibleCustomer(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("unsupported format tag {0:?}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
