use thiserror::Error;

/// Errors raised by the models, the simulator and the workload generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("non-positive reciprocal throughput ({0} s)")]
    NonPositiveReciprocal(f64),

    #[error("wait-time series did not converge within {cap} rows (tail tolerance {tail_tol:e})")]
    NonConvergent { cap: usize, tail_tol: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("unknown workload preset `{0}`")]
    UnknownPreset(String),

    #[error("workload has zero mean IO count")]
    ZeroIoCount,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
