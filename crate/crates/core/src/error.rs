use thiserror::Error;

/// Errors raised by the analysis kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gram matrix is not symmetric: entry ({row},{col}) differs from ({col},{row})")]
    NotSymmetric { row: usize, col: usize },

    #[error("gram matrix is not positive definite: leading principal minor of order {order} is {value}")]
    NotPositiveDefinite { order: usize, value: String },

    #[error("endomorphism is not self-adjoint for the given form")]
    NotSelfAdjoint,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("zeta series diverges: s = {s} must exceed {threshold}")]
    Divergent { s: f64, threshold: f64 },

    #[error("generator {index} rejected: {reason}")]
    GeneratorRejected { index: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Resource errors map to a distinct process exit code in the CLI.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
