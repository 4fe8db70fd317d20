use std::io;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    Geometry(&'static str),

    #[error("rejection sampling for {what} gave up after {attempts} attempts (acceptance {accepted}/{attempts})")]
    RejectionCap {
        what: String,
        attempts: usize,
        accepted: usize,
    },

    #[error("{what}: expected length {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("grid is not Hermitian at tone {tone} of symbol {symbol} (mismatch {mismatch:e})")]
    NotHermitian { symbol: usize, tone: usize, mismatch: f64 },

    #[error("{0} has zero energy")]
    ZeroEnergy(&'static str),

    #[error("{what} is zero at index {index}")]
    ZeroDivisor { what: &'static str, index: usize },

    #[error("regularized correlation matrix is singular")]
    Singular,

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("architecture mismatch: expected `{expected}`, file has `{found}`")]
    Architecture { expected: String, found: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
