use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by table construction, rescaling, and the analysis
/// pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An embedding or grid dimension violates a structural requirement
    /// (odd axis dim, zero extent, mismatched axis count, ...).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// RoPE base frequency must be > 1.
    #[error("invalid base frequency {0}: must be > 1")]
    InvalidBase(f64),

    /// Scheduler coefficient or ramp bounds out of range.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// Promotion factor below 1 (target extent smaller than training extent).
    #[error("invalid promotion: {0}")]
    InvalidPromotion(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two array-like inputs disagree on shape or length.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A denoiser produced NaN or infinity during the sampling loop.
    #[error("non-finite value produced by the denoiser at step {step}")]
    NonFinite { step: usize },

    /// Too little input to produce a meaningful result (empty corpus,
    /// too few seeds or repetitions, empty timestep list, ...).
    #[error("insufficient input: {0}")]
    Insufficient(String),

    /// Malformed configuration file or value.
    #[error("config error: {0}")]
    Config(String),

    /// Unreadable or unsupported image data.
    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
