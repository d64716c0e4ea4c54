use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {needed} qubits requested, cap is {cap}")]
    Capacity { needed: usize, cap: usize },

    #[error("zero-probability branch (p = {0:e})")]
    ZeroBranch(f64),

    #[error("routing error: {0}")]
    Routing(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
