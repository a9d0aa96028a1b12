use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A QR diagonal entry fell below the relative rank tolerance.
    #[error("rank-deficient matrix: |R[{column}][{column}]| = {value:e} relative to column norm {column_norm:e}")]
    RankDeficient {
        column: usize,
        value: f64,
        column_norm: f64,
    },
    #[error("singular triangular factor: zero diagonal at index {index}")]
    SingularR { index: usize },
    /// Parametric derivative too short for the density to be defined.
    #[error("tangent vector {component} vanishes (norm {norm:e})")]
    ZeroTangent { component: usize, norm: f64 },
    #[error("parameter {xi:?} outside chart domain [{lower:?}, {upper:?}]")]
    OutOfDomain {
        xi: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    #[error("non-finite value produced by {context}")]
    NonFinite { context: &'static str },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty sample")]
    EmptySample,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures that come from the numerics rather than from
    /// the caller's configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::SingularR { .. }
                | Error::ZeroTangent { .. }
                | Error::NonFinite { .. }
        )
    }
}

pub(crate) fn ensure_finite(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}
