use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has {cells} cells, above the budget of {budget}")]
    CellBudget { cells: usize, budget: usize },

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("non-finite sample at cell {cell}")]
    NonFinite { cell: usize },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("modular overflowed at cell {cell}")]
    ModularOverflow { cell: usize },

    #[error("Luxemburg bisection did not converge after {iterations} iterations, bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("cube family is not pairwise disjoint (cell {cell} is covered twice)")]
    OverlappingCubes { cell: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
