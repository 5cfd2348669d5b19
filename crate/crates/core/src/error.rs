use thiserror::Error;

/// Errors raised by the decision procedures and their supporting kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:.3e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("all generators are zero")]
    AllZeroGenerators,

    #[error("size cap exceeded: {what} requires {required}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("operator is a phase times a positive definite operator; no number of copies suffices")]
    NotDistinguishable,

    #[error("{given} copies requested but at least {needed} are required")]
    InsufficientCopies { needed: usize, given: usize },

    #[error("subspace is not closed under the adjoint")]
    NotHermitianClosed,

    #[error("not a density operator: {0}")]
    NotDensityOperator(String),

    #[error("negative entry {value:.3e} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("Kraus operators are not trace preserving (defect {defect:.3e})")]
    KrausIncomplete { defect: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
