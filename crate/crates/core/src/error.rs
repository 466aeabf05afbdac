use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("signal shorter than window: {len} samples < window {window}")]
    SignalTooShort { len: usize, window: usize },

    #[error("separation vector {row} is off the unit sphere (norm {norm})")]
    Infeasible { row: usize, norm: f64 },

    #[error("row {0} has zero norm, direction undefined")]
    ZeroRow(usize),

    #[error("spectrum is not conjugate symmetric (max deviation {0:e})")]
    SymmetryViolation(f64),

    #[error("conjugate gradient diverged: {0}")]
    Divergence(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("zero variance input")]
    ZeroVariance,

    #[error("empty input")]
    EmptyInput,

    #[error("SNR signal mask is empty; use a longer signal for finer frequency resolution")]
    EmptyMask,

    #[error("dense oracle refused instance of size {0} (limit 5000)")]
    OracleTooLarge(usize),
}
