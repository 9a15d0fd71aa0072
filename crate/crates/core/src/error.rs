use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("total ballot weight is zero")]
    ZeroTotalWeight,

    #[error("negative ballot weight at ballot {0}")]
    NegativeWeight(usize),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("k = {k} is outside 1..={n}")]
    BadK { k: usize, n: usize },

    #[error("need at least {min} candidates, got {n}")]
    BadN { n: usize, min: usize },

    #[error("argument outside its domain: {0}")]
    BadDomain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instance has no metric")]
    MissingMetric,

    #[error("metric is invalid: {0}")]
    InvalidMetric(String),

    #[error("distribution is invalid: {0}")]
    InvalidDistribution(String),

    #[error("invalid position set: {0}")]
    BadPositions(String),

    #[error("invalid message partition: {0}")]
    BadPartition(String),

    #[error("enumerating all rankings of {n} candidates exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("epsilon must lie in (0, 1/8), got {0}")]
    BadEpsilon(String),

    #[error("rule partition is not generated by positions {0}")]
    NotKEntry(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("unknown rule `{0}`")]
    UnknownRule(String),

    #[error("aggregator failed: {0}")]
    Aggregator(String),

    #[error("simplex exceeded {0} pivots")]
    LpIterationLimit(usize),
}
