use thiserror::Error;

/// Errors raised by the link model, analysis and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time bin {index} out of range for {bins} bins")]
    TimeBinOutOfRange { index: u64, bins: u64 },

    #[error("delay address {address} out of range for a {stages}-stage line")]
    AddressOutOfRange { address: u64, stages: u32 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{bins} bins is too many for exhaustive enumeration (at most {max})")]
    EnumerationTooLarge { bins: u64, max: u64 },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed configuration input rather than
    /// out-of-domain values.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that `value` is a finite probability.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}
