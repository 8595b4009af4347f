use thiserror::Error;

pub type Result<T> = std::result::Result<T, ChaosError>;

/// Errors produced by construction and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("expected {expected} cell values for level {level}, got {got}")]
    LengthMismatch {
        level: u32,
        expected: usize,
        got: usize,
    },

    #[error("non-finite cell value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("level {level} exceeds the supported maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("refinement target {target} is coarser than level {level}")]
    CoarseningForbidden { level: u32, target: u32 },

    #[error("level {level} too coarse: {what} needs level >= {required}")]
    LevelTooCoarse {
        what: String,
        level: u32,
        required: u32,
    },

    #[error("invalid index pair ({i}, {j}): need 1 <= i < j")]
    InvalidPair { i: u32, j: u32 },

    #[error("invalid linear position {position}: positions start at 1")]
    InvalidLinearPosition { position: u64 },

    #[error("invalid {what}: {value}")]
    InvalidIndex { what: &'static str, value: u64 },

    #[error("{what} out of range: {value} (allowed: {range})")]
    ParameterOutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("cannot parse {what}; expected {expected}")]
    ParseError {
        what: &'static str,
        expected: &'static str,
    },

    #[error("empty coefficient family where at least one entry is required")]
    EmptyCoefficients,

    #[error(
        "{pairs} pairs exceed the exhaustive enumeration limit {limit}; use the randomized search"
    )]
    TooManyPairs { pairs: usize, limit: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: u32 },

    #[error("point t = {t} outside the domain (0, 1]")]
    PointOutOfDomain { t: f64 },

    #[error("sign value {value} is not +1 or -1")]
    InvalidSign { value: i8 },

    #[error("unsupported norm for functions on the square: {spec}")]
    UnsupportedSquareNorm { spec: String },
}
