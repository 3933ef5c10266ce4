use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("triangle violation: ({0}, {1}, {2}) (doubled)")]
    TriangleViolation(i64, i64, i64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree too high: degree {degree} exceeds cap {cap}")]
    DegreeTooHigh { degree: usize, cap: usize },
    #[error("quadrature grid too coarse: degree {have} < required {need}")]
    GridTooCoarse { have: usize, need: usize },
    #[error("overflow converting {0} to f64")]
    Overflow(String),
    #[error("radicals not commensurable: {0}")]
    Incommensurable(String),
    #[error("counterexample to closed formula at ({0}, {1}, {2}): closed {3} vs brute {4}")]
    Counterexample(usize, usize, usize, String, String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable snake_case tag for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::TriangleViolation(..) => "triangle_violation",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegreeTooHigh { .. } => "degree_too_high",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::Overflow(_) => "overflow",
            Error::Incommensurable(_) => "incommensurable",
            Error::Counterexample(..) => "counterexample",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
