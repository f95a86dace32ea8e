use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected {expected} retention probabilities, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("retention probability #{index} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol {symbol} out of range (alphabet size {alphabet})")]
    SymbolOutOfRange { symbol: u32, alphabet: u32 },
    #[error("requested level {requested} exceeds sampled depth {depth}")]
    DepthExceeded { requested: u32, depth: u32 },
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: u32, got: u32 },
    #[error("factors do not agree: {0}")]
    Mismatch(String),
    #[error("direction {0} is outside the open range (0, pi/2)")]
    DirectionOutOfRange(f64),
    #[error("projection center ({0}, {1}) lies inside the closed unit square")]
    CenterInsideSquare(f64, f64),
    #[error("interval [{lo}, {hi}] lies outside the admissible range [{min}, {max}]")]
    IntervalOutOfRange { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("interval nesting violated: {0}")]
    Nesting(String),
    #[error("collapsed alphabet of size {size} exceeds the cap {cap}")]
    CollapseTooLarge { size: usize, cap: usize },
    #[error("need at least {needed} levels for a slope estimate, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("invalid grid function: {0}")]
    InvalidFunction(String),
    #[error("robustness shrink {shrink} does not fit inside the witness gap {gap}")]
    ShrinkTooLarge { shrink: f64, gap: f64 },
    #[error("tree codec: {0}")]
    Codec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
