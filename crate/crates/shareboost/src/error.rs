use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto exit codes:
/// input/data errors exit with 2, numerical errors with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or dimension mismatch.
    #[error("input error: {0}")]
    Input(String),

    /// Malformed data file.
    #[error("data error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Data { line: Option<usize>, message: String },

    /// Non-finite value encountered during optimization.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn data(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Data { line, message: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
