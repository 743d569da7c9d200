//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong when constructing or combining manifold values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curvature must be a finite negative real, got {0}")]
    InvalidCurvature(f64),

    #[error("point is off the hyperboloid: membership defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    OffManifold { defect: f64, tolerance: f64 },

    #[error("time component must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("vector is not tangent at the base point: <base,v>_L = {defect:.3e}")]
    NotTangent { defect: f64 },

    #[error("tangent vector is time-like: <v,v>_L = {0:.3e} < 0")]
    InvalidTangent(f64),

    #[error("degenerate point pair: parallel transport denominator below 1e-12")]
    DegeneratePair,

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("invalid weight: {0}")]
    InvalidWeight(&'static str),

    #[error("argument outside the open unit ball: |{0}| >= 1")]
    OutsideBall(f64),

    #[error("vector is not time-like; cannot renormalize onto the hyperboloid")]
    NotTimeLike,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("residual method {0} has no gradient path and cannot be trained")]
    NotTrainable(&'static str),

    #[error("loss became non-finite at epoch {epoch}; first non-finite activation in layer {layer}")]
    NanLoss { epoch: usize, layer: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
