//! Exit-code classification.

use std::fmt;

/// A configuration or invariant problem; maps to exit code 2.
#[derive(Debug, Clone)]
pub struct ValidationError(String);

impl ValidationError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation error: {}", self.0)
    }
}

impl std::error::Error for ValidationError {}

/// A numerical check that did not meet its tolerance; maps to exit code 3.
#[derive(Debug, Clone)]
pub struct NumericFailure(pub String);

impl fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numeric failure: {}", self.0)
    }
}

impl std::error::Error for NumericFailure {}

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ValidationError>() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<eitlab_core::Error>() {
            return if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERIC };
        }
    }
    EXIT_NUMERIC
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification_walks_the_chain() {
        let v: anyhow::Error = ValidationError::new("x").into();
        assert_eq!(exit_code(&v.context("outer")), EXIT_VALIDATION);

        let n: anyhow::Error = NumericFailure("gap".into()).into();
        assert_eq!(exit_code(&n), EXIT_NUMERIC);

        let core = Err::<(), _>(eitlab_core::Error::RankDeficient("σ_min = 0".into())).context("reconstruct");
        assert_eq!(exit_code(&core.unwrap_err()), EXIT_NUMERIC);

        let core = Err::<(), _>(eitlab_core::Error::Range("r".into())).context("asymptotics");
        assert_eq!(exit_code(&core.unwrap_err()), EXIT_VALIDATION);

        assert_eq!(exit_code(&anyhow::anyhow!("disk full")), EXIT_NUMERIC);
    }
}
