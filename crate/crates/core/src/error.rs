use std::path::PathBuf;

/// Errors raised by the locking-threshold toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method stopped without meeting its tolerance.
    #[error("no convergence in {what} after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The integrator produced a NaN or infinite phase.
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    /// The bisection bracket could not be established.
    #[error("could not bracket the locking threshold: {0}")]
    Bracket(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
