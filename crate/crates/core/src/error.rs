use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or model parameters.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The caller violated an operation contract (dimension mismatch,
    /// label out of range).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Observed data is unusable, e.g. non-finite rewards.
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical routine failed beyond its recovery policy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Problem size exceeds the guard of the requested exact method.
    #[error("{what}: size {n} exceeds limit {max}; use branch-and-bound or local search")]
    TooLarge {
        what: &'static str,
        n: usize,
        max: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
