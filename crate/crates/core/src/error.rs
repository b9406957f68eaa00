use thiserror::Error;

/// Rejected parameter or configuration value.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field} must be {requirement}, got {value}")]
    Invalid {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("{what} of {span} s is not an integer multiple of the step {step} s")]
    Misaligned { what: &'static str, span: f64, step: f64 },
    #[error("{0}")]
    Other(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, requirement: &'static str, value: f64) -> Self {
        ConfigError::Invalid {
            field,
            requirement,
            value,
        }
    }
}

/// Check `value > 0` (and finite), the most common parameter constraint.
pub(crate) fn positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "finite and > 0", value))
    }
}

pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "finite and >= 0", value))
    }
}
