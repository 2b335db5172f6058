use thiserror::Error;

/// Errors raised by the recovery library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("operator norm {norm} is not below 1; normalize the instance first")]
    Unnormalized { norm: f64 },

    #[error("operator is identically zero")]
    ZeroOperator,

    #[error("spectral map returned {got} values for {expected} singular values")]
    SpectralLength { expected: usize, got: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("invalid bisection bracket: rank {rank} at lambda_hi = {lambda_hi} exceeds target {target}")]
    Bracket {
        lambda_hi: f64,
        rank: usize,
        target: usize,
        probes: Vec<(f64, usize)>,
    },

    #[error("instance carries no ground truth")]
    MissingGroundTruth,

    #[error("brute-force oracle refuses dimension {0} (max 3)")]
    OracleDimension(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
