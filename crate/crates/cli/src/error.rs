use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {}: {source}", source.name())]
    Numerical {
        #[source]
        source: adia_core::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl From<adia_core::Error> for CliError {
    fn from(e: adia_core::Error) -> Self {
        use adia_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::MalformedFile { .. } | E::Io(_) => {
                CliError::Config(format!("{}: {e}", e.name()))
            }
            source => CliError::Numerical { source },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
