use alloc::string::String;

use crate::dsl::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator dimension must be at least 1")]
    EmptyOperator,

    #[error("operator is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U^dag U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} does not factor as {left} x {right}")]
    Factorization { dim: usize, left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("unknown spectroscopy `{name}`; available: {available}")]
    UnknownSpectroscopy { name: String, available: String },

    #[error("diagram uses a magnetic interaction but the model has no magnetic dipole")]
    MissingMagneticDipole,

    #[error("interaction times must be ascending (slot {slot})")]
    NonAscendingTimes { slot: usize },

    #[error("diagram set is not closed under conjugation: {0}")]
    UnpairedDiagram(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("joint dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("shots must be at least 1; use exact simulation for the noiseless value")]
    ZeroShots,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
