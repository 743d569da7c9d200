//! Lorentz-model hyperbolic geometry with residual connection methods.
//!
//! The library implements the hyperboloid (Lorentz) model of hyperbolic space
//! `L^{K,n} = { x in R^{n+1} : <x,x>_L = 1/K, x_t > 0 }` with curvature `K < 0`
//! and the Lorentzian inner product `<x,y>_L = -x_t y_t + x_s . y_s`, together
//! with four ways of adding two points of the manifold:
//!
//! * [`residual::lresnet_add`] — normalize the Euclidean weighted sum back onto
//!   the hyperboloid (the weighted Lorentzian centroid),
//! * [`residual::pt_add`] — parallel transport composition
//!   `exp_x ∘ P_{o→x} ∘ log_o`,
//! * [`residual::ts_add`] — weighted addition in the tangent space at the origin,
//! * [`residual::space_add`] — add space components, recompute the time component.
//!
//! On top of the geometry sit a gradient module with a finite-difference
//! oracle ([`grad`]), executable property checks for the stability bound,
//! non-commutativity and geodesic-equivalence statements ([`verify`]), a small
//! hyperbolic feed-forward network trained on synthetic hierarchical data
//! ([`net`]), and batched kernels for runtime comparisons ([`batch`]).
//!
//! All operations are pure functions of their inputs; nothing in this crate
//! reads the clock or the environment.

pub mod batch;
pub mod error;
pub mod geometry;
pub mod grad;
pub mod net;
pub mod real;
pub mod report;
pub mod residual;
pub mod sampling;
pub mod verify;

pub use error::Error;
pub use geometry::{Curvature, LorentzModel, LorentzPoint, TangentVector, Tolerances};
pub use real::Real;
pub use residual::{ResidualWeights, ScaleFactor};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
