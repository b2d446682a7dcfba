use crate::expr::ExprError;

/// Errors raised by the calculus, structure and verification layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chart dimension must be even and at least 2, got {0}")]
    OddDimension(usize),
    #[error("invalid sampling box: {0}")]
    InvalidBox(String),
    #[error("exterior derivative of a top-degree form (degree {0})")]
    DegreeOverflow(usize),
    #[error("interior product of a degree-0 form")]
    InteriorOfFunction,
    #[error("form of degree {degree} evaluated on {got} vectors")]
    Arity { degree: usize, got: usize },
    #[error("expected a 1-form, got degree {0}")]
    NotOneForm(usize),
    #[error("invalid form key {key:?} for degree {degree} in dimension {dim}")]
    InvalidKey { key: Vec<usize>, degree: usize, dim: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("A*A_inv differs from the identity by {residual:e} at {point:?}")]
    NotInverse { residual: f64, point: Vec<f64> },
    #[error("unknown identity '{0}'")]
    UnknownIdentity(String),
    #[error("could only draw {got} of {wanted} admissible sample points")]
    Sampling { wanted: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
