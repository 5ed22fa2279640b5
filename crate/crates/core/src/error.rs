use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("function undefined at support eigenvalue {eigenvalue:.6e}")]
    Domain { eigenvalue: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("duplicate system label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown system label {0:?}")]
    UnknownLabel(String),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("map is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("map is not subunital (largest eigenvalue of N(I) is {max_eigenvalue:.12})")]
    NotSubunital { max_eigenvalue: f64 },

    #[error(
        "map is not completely positive (minimum Choi eigenvalue {min_choi_eigenvalue:.3e}); \
         witness input has weight {witness_weight:.3e}"
    )]
    NotCompletelyPositive {
        min_choi_eigenvalue: f64,
        witness_weight: f64,
        witness: Vec<nalgebra::Complex<f64>>,
    },

    #[error("instrument is not efficient (outcome {outcome} has {kraus} Kraus operators)")]
    InefficientInstrument { outcome: usize, kraus: usize },

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("relative entropy undefined for the zero operator")]
    ZeroOperator,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("operator is not an isometry (deviation {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("target reference dimension {target} is smaller than source dimension {source_dim}")]
    ReferenceTooSmall { source_dim: usize, target: usize },

    #[error("input leaks outside the guarded Fock subspace (mass {leakage:.3e})")]
    HighEnergyInput { leakage: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
