use thiserror::Error;

/// Errors raised by the simulation engines and analyzers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("series too short: need at least {needed} samples, got {found}")]
    SeriesTooShort { needed: usize, found: usize },
    #[error("negative intensity {value} at sample {index}")]
    NegativeIntensity { index: usize, value: f64 },
    #[error("filter bandwidth {bandwidth} exceeds Nyquist frequency {nyquist}")]
    BandwidthAboveNyquist { bandwidth: f64, nyquist: f64 },
    #[error("too few events for estimation: {0}")]
    InsufficientEvents(usize),
    #[error("normalization undefined: {0}")]
    UndefinedNormalization(&'static str),
    #[error("steady state did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("time step too coarse: dt * max_rate = {0} (must be < 0.05)")]
    StepTooCoarse(f64),
    #[error("state norm drifted to {0}")]
    NormLoss(f64),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("malformed record: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

pub(crate) fn require_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be non-negative and finite, got {value}"),
        })
    }
}
