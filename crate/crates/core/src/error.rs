use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schedule violation at m={m}: x(m)={x} must satisfy 0 <= x(m) < y(m)={y}")]
    ScheduleViolation { m: u64, x: i64, y: i64 },

    #[error("index m must be >= 1, got {0}")]
    ZeroIndex(u64),

    #[error("degenerate normalizer at m={m}")]
    DegenerateNormalizer { m: u64 },

    #[error("negative weight {value} at m={m}, n={n}")]
    NegativeWeight { m: u64, n: u64, value: f64 },

    #[error("horizon {0} is underpowered (need at least 10)")]
    Underpowered(u64),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid model at m={m}: {reason}")]
    InvalidModel { m: u64, reason: String },

    #[error("point {0} lies outside [0, 1]")]
    OutsideUnitInterval(f64),

    #[error("series for m={m} at y={y} did not reach tail tolerance within {cap} terms")]
    SeriesNotConverged { m: u64, y: f64, cap: u64 },

    #[error("operator evaluation failed at n={n}, y={y}: {reason}")]
    OperatorFailure { n: u64, y: f64, reason: String },

    #[error("failed at m={m}: {source}")]
    AtIndex {
        m: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Whether the error stems from the inputs rather than the computation.
    pub fn is_config(&self) -> bool {
        match self {
            Error::ScheduleViolation { .. }
            | Error::ZeroIndex(_)
            | Error::Underpowered(_)
            | Error::InvalidConfig(_)
            | Error::InvalidModel { .. }
            | Error::OutsideUnitInterval(_)
            | Error::NegativeWeight { .. } => true,
            Error::AtIndex { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn at(self, m: u64) -> Self {
        match self {
            e @ Error::AtIndex { .. } => e,
            e => Error::AtIndex { m, source: Box::new(e) },
        }
    }
}
