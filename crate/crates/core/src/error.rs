use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("numerical error in layer `{layer}`: {detail}")]
    Numerical { layer: &'static str, detail: String },

    #[error("degenerate gradient: norm {norm:e} below threshold")]
    DegenerateGradient { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error in {context}: {detail}")]
    Format { context: String, detail: String },

    #[error("cell {cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The underlying error of an experiment-cell wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::InCell { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
