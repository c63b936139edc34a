use thiserror::Error;

use crate::machine::MachineMode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("instruction `{instruction}` is not available on a {mode} machine")]
    ModeViolation {
        instruction: &'static str,
        mode: MachineMode,
    },

    #[error("memory address {addr} out of bounds (memory holds {len} words)")]
    AddressOutOfBounds { addr: u64, len: usize },

    #[error("scattered write conflict at address {addr}: values {first} and {second}")]
    ScatterConflict { addr: u64, first: u64, second: u64 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
