use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MhdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("component mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("field is not divergence-free: max |div| = {0:e}")]
    NotDivergenceFree(f64),
    #[error("invalid exponent: {0}")]
    InvalidExponent(f64),
    #[error("band index {j} outside resolved range [{j_min}, {j_max}]")]
    BandOutOfRange { j: i32, j_min: i32, j_max: i32 },
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("unresolvable tail: no in-band j0 brings the tail below {threshold:e}")]
    UnresolvableTail { threshold: f64 },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("negative time: {0}")]
    NegativeTime(f64),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("bound blows up: denominator {0:e} <= 0 (smallness violated)")]
    BoundBlowUp(f64),
    #[error("CFL violation at t = {t}: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { t: f64, dt: f64, limit: f64 },
    #[error("sequence does not converge within the provided prefix: {0}")]
    NotConverging(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MhdError {
    fn from(e: std::io::Error) -> Self {
        MhdError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MhdError>;
