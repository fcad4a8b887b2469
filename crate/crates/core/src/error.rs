use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("mode count {modes} exceeds the supported maximum of {max}")]
    TooManyModes { modes: usize, max: usize },

    #[error("mode count mismatch: expected {expected}, got {actual}")]
    ModeCountMismatch { expected: usize, actual: usize },

    #[error("invalid mode index {mode} for a {modes}-mode space")]
    InvalidMode { mode: usize, modes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tail mass {tail_mass:.3e} exceeds threshold {threshold:.3e} (raise the cutoff)")]
    TailExceeded { tail_mass: f64, threshold: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("element is not passive: {0}")]
    NotPassive(String),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state spec error at `{path}`: {message}")]
    Spec { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
