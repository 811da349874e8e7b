use crate::numerics::QuadratureResult;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input has the wrong shape or violates a structural invariant
    /// (non-Hermitian matrix, dimension mismatch, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument is outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix or function value was NaN or infinite.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Adaptive quadrature ran out of budget; carries the partial estimate.
    #[error("quadrature did not converge ({context}): value {} +- {}", partial.value, partial.abs_error_estimate)]
    NonConvergence {
        context: String,
        partial: QuadratureResult,
    },

    /// A sampling run produced too few usable points.
    #[error("insufficient samples: {0}")]
    Insufficient(String),

    /// A checkpoint was written for different run parameters.
    #[error("checkpoint fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    /// A checkpoint could not be interpreted.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// The run was interrupted; a checkpoint was written if requested.
    #[error("run interrupted at index {0}")]
    Interrupted(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that stem from bad inputs rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Structural(_)
                | Error::InvalidArgument(_)
                | Error::FingerprintMismatch { .. }
                | Error::Checkpoint(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
