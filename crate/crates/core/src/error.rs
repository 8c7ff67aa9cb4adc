use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure at t = {time}: {detail}")]
    Numerical { time: f64, detail: String },

    #[error("simulation grid too short: {0}")]
    TruncatedGrid(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(time: f64, detail: impl Into<String>) -> Self {
        Error::Numerical {
            time,
            detail: detail.into(),
        }
    }
}
