use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("causality violation: event at t={at} scheduled when clock is {now}")]
    Causality { at: f64, now: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("line {line}: key `{key}`: {msg}")]
    Parse { line: usize, key: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
