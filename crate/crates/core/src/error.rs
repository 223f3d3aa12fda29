use thiserror::Error;

/// Errors raised anywhere in the control pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry violation: {0}")]
    GeometryViolation(String),

    #[error("singular kernel: {0}")]
    SingularKernel(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::GeometryViolation(_) => 3,
            Error::SingularKernel(_) | Error::NumericalFailure(_) => 4,
            Error::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
