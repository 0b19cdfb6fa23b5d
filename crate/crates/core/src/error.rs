use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid belief vector: {0}")]
    InvalidBeliefs(String),

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("belief solver needs at least 2 states after merging, got {0}")]
    TooFewStates(usize),

    #[error("target expectation {target} outside payoff utility range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("operation requires the {expected} gain-loss specification")]
    UnsupportedGainLoss { expected: &'static str },

    #[error("cutoff probability {0} gives an unbounded subjective expectation")]
    UnboundedExpectation(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("certainty-equivalent excess return is undefined at alpha = 0")]
    UndefinedCertaintyEquivalent,

    #[error("oracle refused: {0}")]
    OracleRefused(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
