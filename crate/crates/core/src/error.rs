use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),
    #[error("truncation: edge-zone mass fraction {fraction:.3e} exceeds {tolerance:.3e}")]
    Truncation { fraction: f64, tolerance: f64 },
    #[error("blow-up at t = {time}")]
    BlowUp { time: f64 },
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }
}
