use std::fmt;

use thiserror::Error;

/// Where in an input file a parse error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Byte(u64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {}", n),
            Location::Byte(b) => write!(f, "byte {}", b),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("k = {k} is out of range for a cloud of {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("m = {m} is out of range for a cloud of {n} points")]
    MTooLarge { m: usize, n: usize },
    #[error("index {index} is out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("degenerate neighborhood (covariance rank {rank})")]
    DegenerateNeighborhood { rank: usize },
    #[error("size mismatch: {left} vs {right} points")]
    SizeMismatch { left: usize, right: usize },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line(line),
            message: message.into(),
        }
    }

    pub(crate) fn parse_byte(byte: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Byte(byte),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
