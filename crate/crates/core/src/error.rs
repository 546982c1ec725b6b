use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityCondition,
    #[error("{what}: {got} exceeds the supported maximum of {max}")]
    Capacity {
        what: &'static str,
        got: usize,
        max: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid landmark evanescence distribution: {0}")]
    InvalidLepd(String),
    #[error("range-bearing measurement is singular: landmark coincides with the pose")]
    Singular,
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error("no path from node {start} to node {goal}")]
    NoPath { start: usize, goal: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
