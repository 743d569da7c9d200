//! Floating-point abstraction over the two supported precisions.

use num_traits::Float;

/// Scalar type the geometry is generic over.
///
/// Verification suites run at `f64`; the benchmark kernels and the
/// instability demonstrations run at `f32`. Default tolerances differ by
/// precision: a point counts as on-manifold when `|K<x,x>_L - 1|` stays
/// below the membership tolerance.
pub trait Real:
    Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// "32" or "64", recorded in reports.
    const PRECISION: &'static str;

    /// Default membership tolerance for on-manifold checks.
    fn default_membership_tol() -> Self;

    /// Default tolerance for `<base, v>_L = 0` tangency checks.
    fn default_orthogonality_tol() -> Self;

    /// Threshold below which `sinh(a)/a` and `acosh(b)/sqrt(b^2-1)` switch
    /// to their two-term series.
    fn default_taylor_switch() -> Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    const PRECISION: &'static str = "64";

    fn default_membership_tol() -> Self {
        1e-9
    }
    fn default_orthogonality_tol() -> Self {
        1e-9
    }
    fn default_taylor_switch() -> Self {
        1e-6
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const PRECISION: &'static str = "32";

    fn default_membership_tol() -> Self {
        1e-5
    }
    fn default_orthogonality_tol() -> Self {
        1e-5
    }
    fn default_taylor_switch() -> Self {
        1e-6
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}
