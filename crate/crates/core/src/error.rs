//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("grid needs at least 4 cells, got {0}")]
    TooFewCells(usize),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("evaluation point {x} outside the domain [0, {length}]")]
    PointOutsideDomain { x: f64, length: f64 },
    #[error("table coefficient needs at least two breakpoints with matching values")]
    MalformedTable,
    #[error("table breakpoints must be strictly increasing")]
    UnsortedTable,
    #[error("unknown initial-data preset `{0}`")]
    UnknownPreset(String),
    #[error("initial data field {field} has length {got}, expected {expected}")]
    FieldLength {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("initial data field {field} must vanish at the boundary (|{value:e}| at node {node})")]
    BoundaryNotZero {
        field: &'static str,
        node: usize,
        value: f64,
    },
    #[error("problem data violates the standing hypotheses: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state vector has length {got}, layout requires {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state layouts disagree")]
    LayoutMismatch,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("linear algebra backend failed: {0}")]
    Backend(String),
    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("shift i*{lambda} is numerically on the spectrum (sigma_min = {sigma_min:e})")]
    SingularShift { lambda: f64, sigma_min: f64 },
    #[error("{0}")]
    Unsupported(String),
}

impl From<ndarray_linalg::error::LinalgError> for SolveError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        SolveError::Backend(e.to_string())
    }
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("operation requires the {expected:?} boundary regime, assembly uses {got:?}")]
    WrongBoundaryMode {
        expected: crate::model::BoundaryMode,
        got: crate::model::BoundaryMode,
    },
    #[error("decay fit needs at least {needed} samples in the window, found {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("decay fit window contains nonpositive energy {value:e} at t = {t}")]
    NonPositiveEnergy { t: f64, value: f64 },
    #[error("{0}")]
    ConstantsUnavailable(String),
}
