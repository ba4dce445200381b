use thiserror::Error;

/// Error type shared by all subsystems.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed record header or unknown file layout.
    #[error("format error: {0}")]
    Format(String),
    /// Record shorter than its header promises.
    #[error("truncated record: {0}")]
    Truncation(String),
    /// Non-finite or otherwise invalid payload data.
    #[error("data error: {0}")]
    Data(String),
    /// Caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Numerical failure (e.g. an indefinite pivot in a factorization).
    #[error("numeric error at pivot {pivot}: {msg}")]
    Numeric { msg: String, pivot: usize },
    /// Operation invoked on a state that cannot serve it (e.g. empty model).
    #[error("state error: {0}")]
    State(String),
    /// Mathematically undefined result (e.g. zero denominator).
    #[error("undefined: {0}")]
    Undefined(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
