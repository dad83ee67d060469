use thiserror::Error;

/// Errors produced by model construction and evolution.
#[derive(Debug, Error)]
pub enum QlgaError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate collision eigenvalues: {0}")]
    DegenerateEigenvalues(String),

    #[error("singular G-solve: B[{row},{col}] = {value} but D eigenvalues {row} and {col} coincide")]
    SingularSolve { row: usize, col: usize, value: f64 },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("non-finite amplitude detected at step {tau}: {context}")]
    NonFinite { tau: u64, context: String },

    #[error("wavenumber {l} aliases on {n} sites (need |l| < N/2)")]
    Aliasing { l: i64, n: usize },

    #[error("state vector of {requested} amplitudes exceeds the budget of {budget}")]
    MemoryBudget { requested: usize, budget: usize },

    #[error("overlap magnitude {0:.3e} below threshold; mode decayed or aliased")]
    OverlapLost(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QlgaError>;
