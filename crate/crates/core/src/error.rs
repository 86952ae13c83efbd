use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} assets, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("horizon mismatch: strategy covers {horizon} periods, path has {periods}")]
    HorizonTooShort { horizon: usize, periods: usize },

    #[error("invalid return matrix: {0}")]
    InvalidReturns(String),

    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    #[error("nonpositive price {value} at row {row}, asset {asset}")]
    NonPositivePrice { row: usize, asset: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} exceeds the budget of {limit}; {hint}")]
    BudgetExceeded {
        what: String,
        limit: u64,
        hint: String,
    },

    #[error("payoff is not flagged multiconvex and homogeneous; dominance is not guaranteed")]
    NotMulticonvex,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("payoff is zero on the evaluated path; ratio is undefined")]
    UndefinedPayoff,

    #[error("sigma table is at stage {found}, expected stage {expected}")]
    StageMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, limit: u64, hint: impl Into<String>) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            limit,
            hint: hint.into(),
        }
    }

    /// Input errors map to 2, budget and feasibility errors to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } => 3,
            _ => 2,
        }
    }

    pub fn check_assets(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
