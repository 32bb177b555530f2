use thiserror::Error;

/// Errors raised by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e} > tol {tol:e})")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e} < -{tol:e})")]
    NotPsd { eigenvalue: f64, tol: f64 },
    #[error("negative or non-finite damping time {0}")]
    NegativeTime(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("operator is not a contraction (largest singular value {singular_value})")]
    NotContraction { singular_value: f64 },
    #[error("cannot pad a vector of dimension {dim} down to {target}")]
    ShrinkNotAllowed { dim: usize, target: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("gate matrix is not unitary (defect {0:e})")]
    NonUnitGate(f64),
    #[error("input state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("circuit of width {width} exceeds the supported maximum of {max}")]
    TooWide { width: usize, max: usize },
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("synthesized circuit reached fidelity {0} only")]
    SynthesisFailed(f64),
    #[error("vector is not zero-padded in the ancilla block")]
    NotPadded,
    #[error("weight schedule does not match the time grid: {0}")]
    WeightGridMismatch(String),
    #[error("trajectory family is empty")]
    EmptyFamily,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
