use thiserror::Error;

use crate::matrix::SymMatrix;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, got n={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("half-space coefficient bracket [{lo}, {hi}] does not contain a root (F-1 = {f_lo} .. {f_hi})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("stencil out of grid at level {level}, spatial index {index:?}")]
    StencilOutOfGrid { level: usize, index: [usize; 2] },

    #[error("cylinder exceeds grid: {0}")]
    CylinderOutsideGrid(String),

    #[error("degenerate cylinder: radius {radius} is below grid spacing {h}")]
    DegenerateCylinder { radius: f64, h: f64 },

    #[error("sampling point ({x:?}, t={t}) lies outside the source grid")]
    OutsideGrid { x: [f64; 2], t: f64 },

    #[error("iteration cap {cap} exceeded at level {level}; worst residual {worst_residual:e}")]
    IterationCap { cap: usize, level: usize, worst_residual: f64 },

    #[error("non-monotone stencil: matrix {matrix:?} violates diagonal dominance a_ii >= |a_12|")]
    NonMonotoneStencil { matrix: SymMatrix },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
