use thiserror::Error;

/// Errors raised by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamLength { expected: usize, got: usize },

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max |M - M^T| = {0:e})")]
    NotSymmetric(f64),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown ansatz id '{0}'")]
    UnknownAnsatz(String),

    #[error("ansatz '{id}' needs at least {min} qubits, got {n_qubits}")]
    TooFewQubits { id: String, n_qubits: usize, min: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter-shift rule does not apply to slot {slot} ({kind} gate); use finite differences")]
    ShiftRuleInapplicable { slot: usize, kind: String },

    #[error("dataset has {0} points; the pipeline needs a power of two (subsample first)")]
    NotPowerOfTwo(usize),

    #[error("graph is disconnected ({components} components); increase k or decrease gamma")]
    Disconnected { components: usize },

    #[error("measurement angle set is empty")]
    EmptyAngleSet,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
