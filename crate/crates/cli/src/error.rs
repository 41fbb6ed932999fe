use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A config file that does not parse or validate, with its location.
    #[error("{path}:{line}: {msg}")]
    Config {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Bad command-line input (unknown preset, axis or value list).
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Sim(#[from] ghostsim::Error),
}

impl CliError {
    /// 2 for configuration, 3 for runtime contract violations, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Sim(e) => match e {
                ghostsim::Error::Config(_) => 2,
                ghostsim::Error::Contract(_) | ghostsim::Error::Degenerate(_) => 3,
                ghostsim::Error::Format { .. } | ghostsim::Error::Io { .. } => 4,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
