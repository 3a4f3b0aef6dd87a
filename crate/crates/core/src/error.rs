use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KronError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// `Σᵢ YᵢΨYᵢᵀ` is singular, so the profile objective is undefined.
    #[error("degenerate sample: the inner sum of the profile objective is singular")]
    DegenerateSample,

    #[error("singular transform: {0}")]
    SingularTransform(String),

    #[error("flip-flop step is ill-defined: {0}")]
    StepIllDefined(String),

    #[error("pencil is not generic: {0}")]
    NonGenericPencil(String),

    #[error("repeated eigenvalues (separation {separation:e})")]
    RepeatedEigenvalues { separation: f64 },

    #[error("dimensions out of regime: {0}")]
    OutOfRegime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl KronError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            KronError::DimensionMismatch(_) => "DimensionMismatch",
            KronError::NotSpd(_) => "NotSpd",
            KronError::InvalidSample(_) => "InvalidSample",
            KronError::DegenerateSample => "DegenerateSample",
            KronError::SingularTransform(_) => "SingularTransform",
            KronError::StepIllDefined(_) => "StepIllDefined",
            KronError::NonGenericPencil(_) => "NonGenericPencil",
            KronError::RepeatedEigenvalues { .. } => "RepeatedEigenvalues",
            KronError::OutOfRegime(_) => "OutOfRegime",
            KronError::InvalidArgument(_) => "InvalidArgument",
            KronError::Internal(_) => "Internal",
        }
    }
}

pub type Result<T, E = KronError> = std::result::Result<T, E>;
