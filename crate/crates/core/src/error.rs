use thiserror::Error;

pub type Result<T> = std::result::Result<T, QkdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QkdError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),

    #[error("basis index must be 1 or 2, got {0}")]
    BasisIndex(u8),

    #[error("outcome {index} out of range for dimension {d}")]
    Outcome { index: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("probability row is not normalized: sum {0}")]
    UnnormalizedRow(f64),

    #[error("closed-form weight is singular: phase argument is a multiple of the dimension")]
    SingularWeight,

    #[error("exhaustive enumeration limited to d <= {max}, got {d}; the classical bound is 1")]
    TooLargeForEnumeration { d: usize, max: usize },

    #[error("symmetric eigensolver did not converge (residual {residual:e}, tolerance {tol:e})")]
    EigenNonConvergence { residual: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("intercept-resend requested with an inactive eavesdropper")]
    InactiveEavesdropper,

    #[error("disturbance not defined for protocol `{0}`")]
    UnsupportedProtocol(String),
}
