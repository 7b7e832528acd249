use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for a complex with {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },

    #[error("simplex {0:?} repeats a vertex")]
    DegenerateSimplex(Vec<usize>),

    #[error("duplicate simplex {0:?}")]
    DuplicateSimplex(Vec<usize>),

    #[error("triangle {triangle:?} has face {face:?} which is not an edge of the complex")]
    MissingFace { triangle: [usize; 3], face: [usize; 2] },

    #[error("order {0} is not supported here")]
    UnsupportedOrder(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("subspace selection is empty")]
    EmptySelection,

    #[error("complement subspace has dimension zero; the test is vacuous")]
    EmptyComplement,

    #[error("basis has no columns")]
    EmptyBasis,

    #[error("{observed} observations do not exceed the subspace dimension {subspace_dim}; use the underdetermined detector")]
    UnderdeterminedRegime { observed: usize, subspace_dim: usize },

    #[error("normal equations are singular (rank {rank} of {size}); add regularization")]
    SingularSystem { rank: usize, size: usize },

    #[error("invalid degrees of freedom {0}")]
    InvalidDof(f64),

    #[error("negative argument {0}")]
    NegativeArgument(f64),

    #[error("negative noncentrality {0}")]
    NegativeNoncentrality(f64),

    #[error("invalid target probability {0}")]
    InvalidTarget(f64),

    #[error("noise variance must be positive and finite, got {0}")]
    InvalidVariance(f64),

    #[error("signal law {0} is not supported for this order")]
    UnsupportedLaw(String),

    #[error("signal has zero energy; cannot calibrate a finite SNR")]
    ZeroSignal,

    #[error("sampling rate {0} outside (0, 1]")]
    RateOutOfRange(f64),

    #[error("invalid sampling mask: {0}")]
    InvalidMask(String),

    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
