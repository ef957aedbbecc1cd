//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("qubit address {addr} out of range (register has {n_qubits} qubits)")]
    BadAddress { addr: usize, n_qubits: usize },
    #[error("control and target address the same qubit ({addr})")]
    EqualAddresses { addr: usize },
    #[error("dimension mismatch: state has {state_dim}, target has {target_dim}")]
    DimensionMismatch { state_dim: usize, target_dim: usize },
    #[error("qubit {addr} already holds live state")]
    AddressInUse { addr: usize },
    #[error("register size {n} outside supported range 1..=4")]
    BadRegisterSize { n: usize },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: read failed: {source}")]
    Io { line: usize, source: std::io::Error },
    #[error("trace line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("trace line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("readout confusion matrix is singular (f00 + f11 <= 1)")]
    SingularConfusion,
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("unmatched trace events: {0}")]
    UnmatchedEvents(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}
