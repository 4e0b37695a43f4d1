use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration (schema, unknown keys, bad values).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with arguments outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The grid cannot resolve the requested diffusivity.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Mass leaked into the outer half of the grid beyond the monitored threshold.
    #[error(
        "truncation tail abort at t = {time}: tail fraction {fraction:.3e} exceeds {threshold:.1e}"
    )]
    TailAbort {
        time: f64,
        fraction: f64,
        threshold: f64,
    },

    /// A checked invariant failed (e.g. negative flux slack, mixed ensembles).
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
