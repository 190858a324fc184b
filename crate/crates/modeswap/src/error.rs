use thiserror::Error;

/// Errors shared across the state-construction, closed-form and oracle layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested superposition has vanishing normalization
    /// (the odd cat of the vacuum is the null vector).
    #[error("state normalization vanishes")]
    NullState,

    /// A tail-mass criterion would require more Fock levels than the ceiling allows.
    #[error("required truncation {required} exceeds ceiling {ceiling}")]
    TruncationTooLarge { required: usize, ceiling: usize },

    /// The truncated basis is too small for the requested evaluation.
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Closed forms are derived at resonance only.
    #[error("closed form requires zero detuning, got Omega = {0}")]
    DetuningNotSupported(f64),

    /// No closed form exists for this superposition phase.
    #[error("no closed form for superposition phase {0} rad")]
    UnsupportedPhase(f64),

    /// The closed form requires equal field phases, Im(alpha beta*) = 0.
    #[error("alpha and beta must carry the same phase (Im(alpha beta*) = {0:.3e})")]
    MisalignedAmplitudes(f64),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
