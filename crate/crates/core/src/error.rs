use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value; names the offending key when known.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation not available for the given noise model or state.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A trajectory produced nonfinite coefficients.
    #[error("divergence at step {step} (t = {time}): {detail}")]
    Divergence { step: usize, time: f64, detail: String },

    /// Too few samples for the requested statistic.
    #[error("statistics refused: {0}")]
    Statistics(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
