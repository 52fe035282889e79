use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("interval mismatch: prefix covers [{prefix_start}, {prefix_end}), suffix starts at {suffix_start}, switch at {switch}")]
    IntervalMismatch {
        prefix_start: usize,
        prefix_end: usize,
        suffix_start: usize,
        switch: usize,
    },
    #[error("policy is not defined at level {0}")]
    PolicyDomain(usize),
    #[error("invalid state {state} at level {level}")]
    InvalidState { level: usize, state: usize },
    #[error("invalid action {0}")]
    InvalidAction(usize),
    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),
    #[error("access protocol violated: {0}")]
    Protocol(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dataset load failed at level {level}: {msg}")]
    DatasetLoad { level: usize, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("kernel bandwidth must be positive")]
    ZeroBandwidth,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("optimization diverged at iteration {iteration} (losses so far: {losses:?})")]
    Diverged { iteration: usize, losses: Vec<f64> },
    #[error("no termination within {cap} iterations (last advantages: {advantages:?})")]
    NonTermination { cap: usize, advantages: Vec<f64> },
    #[error("{phase} phase failed at level {level}: {source}")]
    Phase {
        phase: &'static str,
        level: usize,
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_phase(self, phase: &'static str, level: usize) -> Error {
        Error::Phase {
            phase,
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
