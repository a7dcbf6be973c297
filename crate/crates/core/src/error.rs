use thiserror::Error;

/// Errors raised by the probability model, the Fock-space oracle, the
/// inequality catalog and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BellError {
    #[error("mixing parameter p = {0} is outside [0, 1]")]
    MixingOutOfRange(f64),

    #[error("local-oscillator amplitude ({re}, {im}) is not finite")]
    NonFiniteAmplitude { re: f64, im: f64 },

    #[error("truncation N = {0} must be at least 1")]
    InvalidTruncation(usize),

    #[error(
        "truncation N = {truncation} too small: neglected coherent-state weight {tail:e} exceeds {limit:e}"
    )]
    TruncationTooSmall {
        truncation: usize,
        tail: f64,
        limit: f64,
    },

    #[error("inequality {name} expects {expected} settings, got {got}")]
    SettingsLength {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid inequality definition: {0}")]
    InvalidInequality(String),

    #[error("unknown inequality '{0}' (expected one of ch, w1, j1, j2, j3, j4, j5)")]
    UnknownInequality(String),

    #[error("Janssens index {0} is outside 1..=5")]
    JanssensIndex(u8),

    #[error("vertex enumeration limited to 20 settings, got {0}")]
    TooManySettings(usize),

    #[error("invalid optimizer configuration: {0}")]
    Config(String),

    #[error("no violation of {name} at p = 1 (best excess {excess:e})")]
    NoViolation { name: String, excess: f64 },

    #[error("{name} is already violated at p = 0 (excess {excess:e})")]
    ViolatedAtZero { name: String, excess: f64 },
}

pub type Result<T> = std::result::Result<T, BellError>;
