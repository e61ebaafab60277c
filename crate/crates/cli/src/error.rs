use thiserror::Error;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String, usage: Option<String> },

    #[error(transparent)]
    Core(#[from] wba_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            usage: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use wba_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::InvalidWeights(_)
                | E::DimensionMismatch { .. }
                | E::UnsupportedDimension(_) => 2,
                E::PrecisionExhausted { .. } => 3,
                E::UncertifiableComparison { .. } | E::AmbiguityBudgetExceeded { .. } | E::BoundaryAmbiguous => 4,
                _ => 1,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        let p = CliError::from(wba_core::Error::PrecisionExhausted {
            needed: 9,
            available: 1,
        });
        assert_eq!(p.exit_code(), 3);
        let a = CliError::from(wba_core::Error::AmbiguityBudgetExceeded {
            ambiguous: 2,
            total: 3,
            budget_fraction: 0.001,
        });
        assert_eq!(a.exit_code(), 4);
        let u = CliError::from(wba_core::Error::UncertifiableComparison {
            bits: 64,
            context: None,
        });
        assert_eq!(u.exit_code(), 4);
    }
}
