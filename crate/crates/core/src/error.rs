use thiserror::Error;

#[derive(Debug, Error)]
pub enum OctdError {
    #[error("invalid spin magnitude {0}: must be a positive half-integer")]
    InvalidSpin(f64),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Hilbert space dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Fock cutoff too small: population {population:.3e} at the top level exceeds {limit:.1e}")]
    InadequateCutoff { population: f64, limit: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("fixed point {0} does not exist at these parameters")]
    MissingFixedPoint(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("Fock leakage {leakage:.3e} exceeds tolerance in {flagged} trajectories")]
    Leakage { leakage: f64, flagged: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OctdError>;

impl OctdError {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            OctdError::InvalidSpin(_)
            | OctdError::InvalidParams(_)
            | OctdError::DimensionMismatch { .. }
            | OctdError::DimensionCap { .. }
            | OctdError::InadequateCutoff { .. }
            | OctdError::MissingFixedPoint(_)
            | OctdError::Config(_) => 2,
            OctdError::Integration { .. } | OctdError::Numeric(_) => 3,
            OctdError::Leakage { .. } => 4,
            OctdError::Io(_) | OctdError::Csv(_) | OctdError::Json(_) => 5,
        }
    }
}
