use thiserror::Error;

use crate::statevector::GateKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {n_qubits} qubit(s)")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("unsupported qubit count {0}")]
    InvalidQubitCount(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{0} requires an angle")]
    MissingAngle(GateKind),
    #[error("{0} takes no angle")]
    UnexpectedAngle(GateKind),
    #[error("unknown gate kind {0:?}")]
    UnknownGateKind(String),
    #[error("expected {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },

    #[error("catalog: {0}")]
    Catalog(String),
    #[error("duplicate circuit id {0:?}")]
    DuplicateId(String),
    #[error("circuit {id}: {gate} on {qubits:?} violates {connectivity} connectivity")]
    ConnectivityViolation {
        id: String,
        gate: GateKind,
        qubits: Vec<usize>,
        connectivity: String,
    },
    #[error("circuit {id}: malformed parameter declaration: {detail}")]
    MalformedParameter { id: String, detail: String },
    #[error("layer count must be at least 1, got {0}")]
    InvalidLayers(usize),

    #[error("invalid pauli string {0:?}")]
    InvalidPauli(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("unknown hamiltonian {0:?} (expected tfim, heisenberg or localx)")]
    UnknownHamiltonian(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("circuit has no trainable parameters")]
    NoParameters,
    #[error("missing metric {0}")]
    MissingMetric(&'static str),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("results: {0}")]
    Results(String),
    #[error("checksum mismatch for {path}: manifest {expected}, actual {actual}")]
    ChecksumMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
