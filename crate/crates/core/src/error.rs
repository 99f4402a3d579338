use thiserror::Error;

/// Errors raised by the rate models, solvers and the simulation lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration violates one of its structural invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// No feasible (training, feedback) allocation exists.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The Doppler model violates F < 1/2 or the spectrum is malformed.
    #[error("channel model violation: {0}")]
    Model(String),
    /// A channel matrix was (numerically) rank deficient.
    #[error("rank deficient channel matrix")]
    RankDeficient,
    /// Experiment file or registry error.
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
