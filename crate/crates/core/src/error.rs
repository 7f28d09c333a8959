use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("invalid index {0}")]
    InvalidIndex(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("realizer has no declared modulus")]
    UndeclaredModulus,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("rank exceeds supported ordinal notations")]
    RankOverflow,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
