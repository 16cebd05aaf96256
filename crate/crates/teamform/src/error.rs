use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("invalid coalition: {0}")]
    InvalidCoalition(String),
    #[error("agent {agent} is not a member of the coalition")]
    NotAMember { agent: usize },
    #[error("permutation budget exceeded: n={n} (max {max})")]
    BudgetExceeded { n: usize, max: usize },
    #[error("unsupported weights: the exact DP requires integer weights and quota")]
    UnsupportedWeights,
    #[error("distribution infeasible: {0} consecutive rejected samples")]
    DistributionInfeasible(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("training failure: non-finite parameters in seat {seat} at episode {episode}")]
    TrainingFailure { seat: usize, episode: usize },
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
