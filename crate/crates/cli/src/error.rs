use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Resource(String),

    #[error(transparent)]
    Core(#[from] spinchain::Error),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 0 success, 2 usage, 3 resource cap, 4 invariant failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use spinchain::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::Argument(_) | E::Contract(_) | E::Regime { .. } | E::Mismatch(_) => 2,
                E::Resource(_) => 3,
                E::Invariant(_) | E::NotConverged { .. } | E::Singular(_) => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
