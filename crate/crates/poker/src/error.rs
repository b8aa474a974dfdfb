use thiserror::Error;

pub type Result<T, E = PokerError> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PokerError {
    #[error("invalid card `{0}`")]
    InvalidCard(String),
    #[error("duplicate card {0}")]
    DuplicateCard(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error in hand `{hand}`: {message}")]
    Validation { hand: String, message: String },
    #[error("monte carlo hand strength requires a seed")]
    MissingSeed,
    #[error("k = {k} is out of range for {n} items (need 2 <= k <= n)")]
    KOutOfRange { k: usize, n: usize },
    #[error("cannot subsample {requested} items from {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("decomposition error in hand `{hand}`: {message}")]
    Decomposition { hand: String, message: String },
    #[error(transparent)]
    Core(#[from] aivat::Error),
}
