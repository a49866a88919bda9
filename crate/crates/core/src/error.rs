use thiserror::Error;

/// Crate-wide error type. Every fallible operation in the library returns
/// one of these variants; none of them panic on user input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("composition parts sum to {got}, expected {expected}")]
    CompositionMismatch { expected: u64, got: u64 },

    #[error("composition part must be positive in this context")]
    ZeroPart,

    #[error("element does not belong to this lattice context: {0}")]
    ContextMismatch(String),

    #[error("rank {rank} out of range 0..={max}")]
    RankOutOfRange { rank: u32, max: u32 },

    #[error("requested enumeration exceeds the configured size guard: {0}")]
    TooLarge(String),

    #[error("operation requires {expected} mode, found {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("component index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("chain limits have {params} entries, family has {family} components")]
    ParamMismatch { params: usize, family: usize },

    #[error("interval comparison could not separate the operands at {0} bits")]
    PrecisionExhausted(u32),

    #[error("malformed instance: {0}")]
    ShapeMismatch(String),

    #[error("no feasible composition exists")]
    Infeasible,

    #[error("invalid lattice context: {0}")]
    InvalidContext(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
