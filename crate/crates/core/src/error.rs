use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mode {mode} out of range for order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("invalid mode sets: {0}")]
    InvalidModeSets(String),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid cost specification: {0}")]
    InvalidSpec(String),

    #[error("cost specification is not compatible with the {0} group")]
    IncompatibleGroup(&'static str),

    #[error("trace form has a non-negligible imaginary part {imag:e} (scale {scale:e})")]
    NonRealTrace { imag: f64, scale: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trigonometric fit failed: {0}")]
    FitFailure(String),

    #[error("root finder did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("matrix drifted {drift:e} from the group (limit {limit:e})")]
    Drift { drift: f64, limit: f64 },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("quadratic form certification failed for pair ({i}, {j}): residual {residual:e}")]
    Certification { i: usize, j: usize, residual: f64 },

    #[error("projected gradient has non-zero diagonal {0:e}; the cost is not phase invariant")]
    PhaseInvariance(f64),

    #[error("gradient is zero: the point is stationary")]
    Stationary,

    #[error("trace lacks the detail required: {0}")]
    InsufficientTrace(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
