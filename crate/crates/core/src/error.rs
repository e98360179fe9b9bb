use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not divisible: numerator is not a multiple of the denominator")]
    NotDivisible,

    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("substitution of zero for a Laurent variable")]
    ZeroSubstitution,

    #[error("inconsistent traces: {coordinate} component is not a Laurent polynomial")]
    InconsistentTraces { coordinate: &'static str },

    #[error("operation undefined on the zero polynomial")]
    ZeroPolynomial,

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("constants checksum mismatch: file declares {declared}, contents hash to {computed}")]
    ChecksumMismatch { declared: String, computed: String },

    #[error("malformed constants file: {0}")]
    Constants(String),

    #[error("cache entry {path} is corrupt: {message}")]
    CorruptCache { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
