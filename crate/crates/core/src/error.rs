use thiserror::Error;

/// Errors raised by the samplers and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("logit at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("logit vector needs at least 2 entries, got {len}")]
    TooShort { len: usize },

    #[error("temperature must be positive and finite, got {0}")]
    TemperatureNonPositive(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("planted cliff was not the dominant weighted drop after {retries} attempts")]
    SpecInfeasible { retries: usize },

    #[error("collapse index {index} is out of range for {sentences} sentences")]
    IndexOutOfRange { index: i64, sentences: usize },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(Error::TemperatureNonPositive(temperature))
    }
}
