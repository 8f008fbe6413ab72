use thiserror::Error;

/// Errors raised by the core primitives and the KEM.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrodoError {
    #[error("{what}: expected {expected} bytes, got {actual}")]
    InvalidLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("row index {row} out of range for n = {n}")]
    RowOutOfRange { row: usize, n: usize },
    #[error("sample count {count} is not one of the supported shapes")]
    SampleCount { count: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("row provider exhausted after {0} rows")]
    ProviderExhausted(usize),
    #[error("absorb called after squeezing started")]
    AbsorbAfterSqueeze,
    #[error("unknown security level {0}")]
    UnknownLevel(String),
    #[error("level mismatch: object is {found}, operation expects {expected}")]
    LevelMismatch { expected: u32, found: u32 },
}

pub type Result<T> = core::result::Result<T, FrodoError>;
