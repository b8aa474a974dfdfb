use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the estimator library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid history `{0}`")]
    InvalidHistory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("game too large to enumerate: more than {limit} terminal histories")]
    TooLarge { limit: usize },
    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate control variate: variance {0} is not positive")]
    DegenerateVariate(f64),
    #[error("missing strategy for player {player} at information set `{infoset}`")]
    MissingStrategy { player: usize, infoset: String },
    #[error("degenerate imaginary-observation group at `{0}`: zero reach denominator")]
    DegenerateGroup(String),
    #[error("heuristic has no value for history `{0}`")]
    MissingHeuristicValue(String),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimension { expected: usize, got: usize },
    #[error(
        "second-moment matrix is singular (condition number {condition:.3e}); \
         the psi vectors lie on a common hyperplane, so no unique minimiser exists"
    )]
    HyperplaneDegeneracy { condition: f64 },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("estimate {index} has zero variance, inverse-variance weight is infinite")]
    InfiniteWeight { index: usize },
    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),
    #[error("optimizer diverged at iteration {iteration}: objective is not finite")]
    Divergence { iteration: usize },
}
