use thiserror::Error;

/// Errors surfaced by the library and mapped to process exit codes by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad command line or config syntax.
    #[error("{0}")]
    Usage(String),

    /// A precondition or invariant on input data was violated.
    #[error("{0}")]
    InvalidInput(String),

    /// A file could not be parsed; `line` is the 1-based physical line.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Vector/matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// No threshold assignment can reach the requested accuracy floor.
    #[error("accuracy floor {floor} is unachievable; ceiling is {ceiling}")]
    InfeasibleFloor { floor: f64, ceiling: f64 },

    /// Training or evaluation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Short machine-parseable category used in CLI error lines.
    pub fn code_name(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::InfeasibleFloor { .. } => "infeasible",
            Error::Numerical(_) => "numerical",
            _ => "data",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::InfeasibleFloor { .. } => 4,
            Error::Numerical(_) => 5,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
