use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] fxduo::Error),
}

impl CliError {
    /// 2 for bad input, 1 for failures while computing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(fxduo::Error::Domain { .. } | fxduo::Error::Degenerate(_) | fxduo::Error::Empty(_)) => 2,
            CliError::Model(_) => 1,
            _ => 2,
        }
    }
}
