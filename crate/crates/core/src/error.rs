use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("distillation success probability is zero; output state undefined")]
    UndefinedOutput,

    #[error(
        "certain reset at level {level}: no probability mass at or above threshold {threshold}"
    )]
    CertainReset { level: usize, threshold: usize },

    #[error(
        "infeasible schedule at level {level}: channel budget {budget} below threshold {threshold}"
    )]
    InfeasibleSchedule {
        level: usize,
        budget: usize,
        threshold: usize,
    },

    #[error("envelopes are not aligned: {0}")]
    Misaligned(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
