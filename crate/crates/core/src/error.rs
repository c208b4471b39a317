use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed generator: {0}")]
    MalformedGenerator(String),

    #[error("spin-orbital index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("wrong operator kind: {0}")]
    WrongKind(String),

    #[error("pair does not contract to a triple excitation: {0}")]
    NonContracting(String),

    #[error("FCIDUMP line {line}: {message}")]
    Fcidump { line: usize, message: String },

    #[error("cannot freeze {requested} spatial orbitals with only {occupied} doubly occupied")]
    FreezeTooMany { requested: usize, occupied: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("sector dimension {dim} exceeds solver limit {limit}")]
    SectorTooLarge { dim: usize, limit: usize },

    #[error("empty operator pool")]
    EmptyPool,

    #[error("optimizer failed after {iterations} iterations (gradient norm {grad_norm:e}): {reason}")]
    OptimizerFailure {
        iterations: usize,
        grad_norm: f64,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
