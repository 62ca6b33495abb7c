use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("graph is not connected")]
    Connectivity,
    #[error("signal is in the {found} domain, expected {expected}")]
    Domain {
        expected: &'static str,
        found: &'static str,
    },
    #[error("topology generation failed: {0}")]
    Generation(String),
    #[error("rank-1 downdate lost positive definiteness")]
    DowndateFailure,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("error dynamics are unstable (spectral radius {0})")]
    UnstableDynamics(f64),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "ShapeError",
            Error::Connectivity => "ConnectivityError",
            Error::Domain { .. } => "DomainError",
            Error::Generation(_) => "GenerationError",
            Error::DowndateFailure => "DowndateFailure",
            Error::Input(_) => "InputError",
            Error::Config(_) => "ConfigError",
            Error::Numerical(_) => "NumericalError",
            Error::UnstableDynamics(_) => "UnstableDynamicsError",
            Error::Io(_) => "IoError",
            Error::Parse(_) => "ParseError",
        }
    }

    /// Failures that end one filter run but say nothing about the configuration.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::DowndateFailure | Error::Input(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_shape(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Shape(what()))
    }
}
