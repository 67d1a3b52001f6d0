use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e}); noise variance must be > 0")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("noise variance must be positive, got {0}")]
    NoiseVariance(f64),

    #[error("variance must be positive, got {0}")]
    Variance(f64),

    #[error("bit vector of length {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("channel needs at least as many receive as transmit antennas (N = {rx}, M = {tx})")]
    AntennaCount { rx: usize, tx: usize },

    #[error("{detector} enumerates 2^{bits} hypotheses, over the limit of 2^{limit}")]
    Complexity {
        detector: &'static str,
        bits: usize,
        limit: usize,
    },

    #[error("ring topology needs at least 3 antennas (got M = {0}); use the fully-connected detector")]
    RingTooSmall(usize),

    #[error("operation requires a ring topology")]
    NotRing,

    #[error("invalid antenna permutation {0:?}")]
    Permutation(Vec<usize>),

    #[error("no closed-form operation count for detector `{0}`")]
    NoComplexityModel(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
