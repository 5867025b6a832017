use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },

    #[error("{value} is not a square modulo {p}")]
    NotASquare { value: u64, p: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("character with index {index} mod {modulus} is not primitive")]
    NotPrimitive { index: u64, modulus: u64 },

    #[error("quadratic character expansion invalid at depth {depth}: {reason}")]
    ExpansionInvalid { depth: u32, reason: String },

    #[error("coprimality precondition failed: {0}")]
    NotCoprime(String),

    #[error("index {index} outside table range 1..={nmax}")]
    OutOfRange { index: u64, nmax: u64 },

    #[error("coefficient table too small: need {needed}, have {have}")]
    TableTooSmall { needed: u64, have: u64 },

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("cache checksum mismatch")]
    ChecksumMismatch,

    #[error("cache version mismatch: file has {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("cache format error: {0}")]
    CacheFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
