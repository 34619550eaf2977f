use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 32")]
    GridSize(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    GridSpacing(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("propagation distance must be non-negative and finite, got {0}")]
    NegativeDistance(f64),
    #[error("invalid turbulence parameter: {0}")]
    Turbulence(&'static str),
    #[error("azimuthal index {0} is outside the supported range |l| <= 6")]
    ModeIndex(i32),
    #[error("beam waist must be positive, got {0}")]
    Waist(f64),
    #[error("unsupported number of multiplexed modes {0} (expected 2..=5)")]
    ModeCount(usize),
    #[error("expected {expected} phase screens, got {got}")]
    ScreenCount { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix of size {0} is outside the supported range")]
    MatrixSize(usize),
    #[error("matrix is not a contraction (largest singular value {0})")]
    NotContraction(f64),
    #[error("rail index {rail} out of range for {n} rails")]
    RailIndex { rail: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("ensemble needs at least {needed} realizations, got {got}")]
    EnsembleTooSmall { needed: usize, got: usize },
    #[error("inconsistent rail count in ensemble (expected {expected}, got {got})")]
    RailCount { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(alloc::string::String),
    #[error("realization {realization} (cn2 index {cn2_index}, n index {n_index}): {source}")]
    Realization {
        cn2_index: usize,
        n_index: usize,
        realization: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
