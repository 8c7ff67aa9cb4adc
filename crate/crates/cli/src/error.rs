use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),

    #[error(transparent)]
    Solver(#[from] crossqed::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for anything the user can fix in the config, 3 for numerical
    /// failures, 4 when a solver did not converge.
    pub fn exit_code(&self) -> i32 {
        use crossqed::Error as E;
        match self {
            CliError::Config(_) | CliError::ReadConfig { .. } | CliError::Write(_) => 2,
            CliError::Solver(E::InvalidParameter(_) | E::Unsupported(_) | E::Config(_)) => 2,
            CliError::Solver(E::Numerical { .. } | E::TruncatedGrid(_)) => 3,
            CliError::Solver(E::Convergence(_)) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
