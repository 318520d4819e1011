use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(u32, u32),
    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: String,
    },
    #[error("coefficient {0} is not a dyadic rational representable at resolution 2^-{1}")]
    NotRepresentable(String, u32),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("domain width {width} exceeds limit {limit}")]
    WidthOverflow { width: u64, limit: u64 },
    #[error("set is not uniform at level {0}")]
    NotUniform(usize),
    #[error("profile has {got} levels, expected {expected}")]
    ProfileLength { expected: usize, got: usize },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{0} is not a fourth power of a power of two")]
    NotFourthPower(u64),
    #[error("{atoms} support atoms exceed the pair-counting limit {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
