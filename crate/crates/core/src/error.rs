use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("arm {arm} is empty; every arm needs at least one hyperedge")]
    EmptyArm { arm: usize },
    #[error("arm {arm} hop {hop} has overlap 0; overlaps must be at least 1")]
    ZeroOverlap { arm: usize, hop: usize },
    #[error("source {0} does not lie within the structure")]
    SourceOutOfRange(crate::SourceEstimate),
    #[error("cannot infect {requested} hyperedges: the structure only has {available}")]
    TooManyInfected { requested: usize, available: usize },
    #[error("an infection run needs at least one infected hyperedge")]
    NothingInfected,
    #[error("{size} hyperedges exceed the enumeration limit of {limit}; use the Monte Carlo or time-domain estimators")]
    EnumerationTooLarge { size: usize, limit: usize },
    #[error("region does not fit the structure it was evaluated against")]
    RegionMismatch,
    #[error("noise target is inadmissible: {0}")]
    InadmissibleNoise(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
