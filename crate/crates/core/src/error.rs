use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis is not unimodular: |det| = {0}")]
    NotUnimodular(f64),
    #[error("matrix not in the decomposable set: top-left {0}x{0} block is singular")]
    SingularBlock(usize),
    #[error("enumeration too large ({candidates:.3e} candidates, budget {budget:.3e}); {hint}")]
    BudgetExceeded {
        candidates: f64,
        budget: f64,
        hint: &'static str,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("origami line {line}: {msg}")]
    OrigamiFormat { line: usize, msg: String },
    #[error("invalid origami: {0}")]
    InvalidOrigami(String),
    #[error("invalid separatrix germ: {0}")]
    InvalidGerm(String),
    #[error("trace from germ {germ} in direction ({p},{q}) did not reach a cone point within {periods} periods")]
    TraceExhausted {
        germ: usize,
        p: i64,
        q: i64,
        periods: usize,
    },
    #[error("query {0} outside the covered range")]
    OutOfRange(f64),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
