use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HfError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("size guard: {what} has {got} qubits, limit is {limit}")]
    SizeGuard {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("operators do not commute: {0} and {1}")]
    NonCommuting(String, String),
    #[error("non-Clifford gate in Clifford-only context: {0}")]
    NonClifford(String),
    #[error("unmatched Toffoli pair id {0}")]
    UnmatchedToffoli(u32),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("ancilla budget exceeded: need {need}, have {have}")]
    AncillaBudget { need: usize, have: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown name: {0}")]
    Unknown(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
}

pub type Result<T> = std::result::Result<T, HfError>;

impl HfError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        HfError::InvalidArgument(msg.into())
    }
}
