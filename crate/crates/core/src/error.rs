use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid model parameters: {0}")]
    Params(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration budget exceeded: {states} states > budget {budget}")]
    BudgetExceeded { states: f64, budget: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("partition is not determinate: {0}")]
    Partition(String),

    #[error("inadmissible assignment of sampled variables: residual condition {0} violated")]
    Inadmissible(usize),

    #[error("invalid dual configuration at site {site}")]
    InvalidDualConfig { site: usize },

    #[error("rejection sampler gave up after {0} consecutive rejections")]
    RejectionLimit(u64),

    #[error("annealing ladder too short: level {level} log-weight variance {variance:.3} exceeds {limit}")]
    LadderTooShort { level: usize, variance: f64, limit: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("a dual factor has zero weight on some symbol; the reciprocal estimator needs strictly positive weights")]
    ZeroWeightSupport,

    #[error("empty accumulator")]
    EmptyAccumulator,
}
