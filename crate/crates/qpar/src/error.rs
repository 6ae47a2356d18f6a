use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum QparError {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("layer {layer} uses qubit {qubit} more than once")]
    LayerOverlap { layer: usize, qubit: usize },

    #[error("gate matrix is not unitary (max deviation {dev:.3e})")]
    NonUnitary { dev: f64 },

    #[error("circuit width {got} does not match expected width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("width {width} exceeds the dense simulation cap of {cap} qubits")]
    WidthOverCap { width: usize, cap: usize },

    #[error("dimension {n} exceeds the bit-matrix cap of {cap}")]
    DimensionOverCap { n: usize, cap: usize },

    #[error("matrix dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },

    #[error("matrix is singular over GF(2)")]
    SingularMatrix,

    #[error("gates {i} and {j} do not commute (commutator norm {norm:.3e})")]
    NonCommuting { i: usize, j: usize, norm: f64 },

    #[error("rewrite rule '{rule}' failed its matrix check (deviation {dev:.3e})")]
    RuleVerificationFailure { rule: String, dev: f64 },

    #[error("{context}: unsupported gate {found}")]
    UnsupportedGate { context: String, found: String },

    #[error("malformed input shape: {0}")]
    ShapeViolation(String),

    #[error("no common eigenbasis found after {attempts} seeded attempts")]
    DiagonalizationFailed { attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QparError>;
