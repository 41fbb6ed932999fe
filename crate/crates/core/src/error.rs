use std::path::PathBuf;

/// Errors raised by the simulator and reconstructors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid user-supplied parameters (dimensions, counts, names).
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition between otherwise valid values was violated,
    /// e.g. mismatched grid dimensions.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input is well-formed but carries no usable variation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A file was readable but its contents are not in the expected format.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub(crate) fn ensure_dims(what: &str, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::Contract(format!(
            "{what}: expected {}x{}, got {}x{}",
            expected.0, expected.1, got.0, got.1
        )));
    }
    Ok(())
}
