use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid hyper-parameters or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad arguments: shape mismatches, empty inputs, out-of-range labels.
    #[error("argument error: {0}")]
    Argument(String),

    /// A computation produced (or was fed) a non-finite value.
    #[error("numeric error in tensor {tensor}: {message}")]
    Numeric { tensor: usize, message: String },

    /// Malformed binary input.
    #[error("format error in {path} at byte offset {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(tensor: usize, msg: impl Into<String>) -> Self {
        Error::Numeric {
            tensor,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
