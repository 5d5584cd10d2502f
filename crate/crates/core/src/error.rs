use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid weight {0}")]
    InvalidWeight(u32),

    #[error("precision {got} too small, need at least {need}")]
    PrecisionTooSmall { got: usize, need: usize },

    #[error("space of cusp forms of weight {0} is zero-dimensional")]
    EmptySpace(u32),

    #[error("T_2 has a repeated eigenvalue in weight {0}; simultaneous diagonalization is not attempted")]
    RepeatedEigenvalue(u32),

    #[error("characteristic polynomial of T_2 in weight {weight} has {found} real roots, expected {expected}")]
    NonRealSpectrum {
        weight: u32,
        found: usize,
        expected: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("prime {prime} exceeds the table bound {bound}")]
    Coverage { prime: u64, bound: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tuple budget exceeded: {tuples} tuples > {budget}")]
    BudgetExceeded { tuples: f64, budget: f64 },

    #[error("real part {sigma} below the admissible bound {min}")]
    SigmaTooSmall { sigma: f64, min: f64 },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
