use thiserror::Error;

/// Errors raised by the computation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its physical range ({range})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{what} is not a finite number")]
    NotFinite { what: &'static str },
    #[error("series did not reach tail bound {tail_epsilon:e} within {max_terms} terms")]
    TruncationFailure { tail_epsilon: f64, max_terms: usize },
    #[error("input photon number k = {0} has no closed form (supported: 0, 1, 2)")]
    UnsupportedK(u32),
    #[error("f_{l}^({k}) is singular at y1 = 0")]
    SingularPoint { k: u32, l: u32 },
    #[error("value overflowed even the log-domain representation")]
    Overflow,
    #[error("truncation n_max = {n_max} drops {dropped_mass:e} of the input norm (limit {limit:e})")]
    TruncationTooSmall {
        n_max: u32,
        dropped_mass: f64,
        limit: f64,
    },
    #[error("outcome l = {0} has zero probability in this state")]
    ZeroProbabilityOutcome(u32),
    #[error("states have incompatible truncations ({0} vs {1})")]
    IncompatibleTruncation(u32, u32),
    #[error("invalid precision policy: {0}")]
    InvalidPolicy(&'static str),
}

impl Error {
    /// Stable identifier used on diagnostic streams.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NotFinite { .. } => "NotFinite",
            Error::TruncationFailure { .. } => "TruncationFailure",
            Error::UnsupportedK(_) => "UnsupportedK",
            Error::SingularPoint { .. } => "SingularPoint",
            Error::Overflow => "Overflow",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::ZeroProbabilityOutcome(_) => "ZeroProbabilityOutcome",
            Error::IncompatibleTruncation(..) => "IncompatibleTruncation",
            Error::InvalidPolicy(_) => "InvalidPolicy",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
