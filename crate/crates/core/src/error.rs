use thiserror::Error;

/// Errors produced by the compiler, the oracle and the learning agent.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("unsupported gate `{name}` at line {line}")]
    UnsupportedGate { name: String, line: usize },

    #[error("qubit index {index} out of range for register of size {size}")]
    QubitOutOfRange { index: usize, size: usize },

    #[error("only a single quantum register is supported")]
    MultipleRegisters,

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("circuit has {circuit} qubits but the oracle is limited to {limit}")]
    TooManyQubits { circuit: usize, limit: usize },

    #[error("qubit count mismatch: {0}")]
    QubitMismatch(String),

    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("device `{device}`: {msg}")]
    Device { device: String, msg: String },

    #[error(
        "circuit with {circuit} qubits does not fit device `{device}` with {device_qubits} qubits"
    )]
    CircuitTooLarge {
        circuit: usize,
        device: String,
        device_qubits: usize,
    },

    #[error("circuit has no initial layout")]
    MissingLayout,

    #[error("circuit already has a layout")]
    LayoutPresent,

    #[error("gate {gate} on qubits {qubits:?} has no calibration on device `{device}`")]
    NotExecutable {
        gate: String,
        qubits: Vec<usize>,
        device: String,
    },

    #[error("action `{0}` is masked in the current state")]
    MaskedAction(String),

    #[error("no legal action in the current state")]
    NoLegalAction,

    #[error("model error: {0}")]
    Model(String),

    #[error("action enumeration mismatch: {0}")]
    ActionMismatch(String),

    #[error("non-finite loss during update: {0}")]
    NonFiniteLoss(String),

    #[error("pipeline `{pipeline}` failed: {msg}")]
    Pipeline { pipeline: String, msg: String },

    #[error("episode exceeded {0} steps without finishing")]
    Timeout(usize),

    #[error("rule validation failed: {0}")]
    RuleValidation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
