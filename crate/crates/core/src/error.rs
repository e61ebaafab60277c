use thiserror::Error;

/// Errors raised by the approximation, lattice and estimation pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("comparison could not be certified at {bits} bits{}", context_suffix(.context))]
    UncertifiableComparison { bits: u32, context: Option<String> },

    #[error("precision exhausted: {needed} bits needed, {available} available")]
    PrecisionExhausted { needed: u64, available: u64 },

    #[error("lattice enumeration budget of {budget} nodes exceeded")]
    EnumerationBudgetExceeded { budget: u64 },

    #[error("membership is within interval width of a region boundary")]
    BoundaryAmbiguous,

    #[error("{ambiguous} of {total} samples were boundary-ambiguous (budget {budget_fraction})")]
    AmbiguityBudgetExceeded {
        ambiguous: u64,
        total: u64,
        budget_fraction: f64,
    },

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("sequences are not prefix-equivalent on the computed horizon")]
    NotEquivalent,

    #[error("only {overlap} overlapping terms after alignment (need at least {needed})")]
    InsufficientHorizon { overlap: usize, needed: usize },
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn uncertifiable(bits: u32, context: impl Into<String>) -> Self {
        Error::UncertifiableComparison {
            bits,
            context: Some(context.into()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
