use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown parameter `{0}`")]
    UnknownAxis(String),

    #[error("bad value `{token}` for `{axis}`: {reason}")]
    BadValue {
        axis: String,
        token: String,
        reason: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("grid has {size} points, more than the limit of {limit}")]
    GridTooLarge { size: String, limit: usize },

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error(transparent)]
    Model(#[from] memtol::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("probabilistic model left the ±{band} band: errors span [{min:+.4}, {max:+.4}]")]
    BandViolation { band: f64, min: f64, max: f64 },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BandViolation { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
