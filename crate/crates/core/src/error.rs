use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input or an inconsistency in mesh or hierarchy structure.
    #[error("structural error: {0}")]
    Structural(String),

    /// A parameter lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver failed on level {level}: {message} (last residual {residual:e})")]
    Solver {
        level: usize,
        message: String,
        residual: f64,
    },

    #[error("cannot allocate level {level}: {message}")]
    Resource { level: usize, message: String },

    /// A broken internal invariant; always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
