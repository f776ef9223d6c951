//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmtError {
    /// Field or force evaluated at a singular point (zero separation).
    #[error("singular evaluation: {0}")]
    Singularity(String),

    /// Geometric inconsistency, e.g. overlapping magnet volumes or a
    /// receiver placed inside the array.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// An argument violates its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Least-squares system is rank deficient.
    #[error("stiffness fit failed: {0}")]
    FitError(String),

    /// Electro-mechanical coupling absent where the result is undefined.
    #[error("gyrator coupling is zero; transfer function undefined")]
    CouplingAbsent,

    /// Time integration produced a non-finite state.
    #[error("integration diverged at step {step} (t = {time} s)")]
    IntegrationDiverged { step: usize, time: f64 },

    /// A series is too short for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Sampling rate too low for the requested demodulation.
    #[error("undersampled series: {0}")]
    Undersampled(String),

    /// Drive configuration is internally inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Envelope has no usable on/off contrast.
    #[error("decode ambiguous: {0}")]
    DecodeAmbiguous(String),

    /// Zero damping makes the requested quantity infinite.
    #[error("undamped resonator: {0}")]
    Undamped(String),
}

impl MmtError {
    /// Exit-code class used by the command-line front end:
    /// 1 validation, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            MmtError::IntegrationDiverged { .. } | MmtError::FitError(_) => 2,
            _ => 1,
        }
    }
}
