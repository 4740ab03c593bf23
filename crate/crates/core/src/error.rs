use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Config` and `Contract` indicate misuse (bad shapes, invalid settings,
/// broken call contracts); the remaining variants are runtime failures of
/// otherwise valid computations.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or incompatible shapes.
    #[error("configuration error: {0}")]
    Config(String),

    /// A call contract was violated (e.g. gradient of a non-scalar).
    #[error("contract error: {0}")]
    Contract(String),

    /// A computation produced NaN/Inf.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A rejection sampler exhausted its draw budget without accepting.
    #[error("sampler starvation in {method}: no accept within {draws} draws")]
    Starvation { method: &'static str, draws: usize },

    /// A resampling step received an all-zero weight batch.
    #[error("degenerate batch: {0}")]
    Degenerate(String),

    /// A training loop exceeded the divergence guard.
    #[error("training diverged at step {step}: |critic objective| = {value:.3e}")]
    Divergence { step: usize, value: f64 },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
