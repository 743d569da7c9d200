//! The Lorentz (hyperboloid) model of hyperbolic space.
//!
//! Points live on the upper sheet of the two-sheeted hyperboloid
//! `<x,x>_L = 1/K`, `x_t > 0`, embedded in Minkowski space with the metric
//! `diag(-1, 1, ..., 1)`. The first coordinate is the time-like component,
//! the remaining `n` coordinates are the space-like components.

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Validated negative curvature of the manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature<T: Real>(T);

impl<T: Real> Curvature<T> {
    /// Requires a finite, strictly negative scalar.
    pub fn new(k: T) -> Result<Self> {
        if !k.is_finite() || k >= T::zero() {
            return Err(Error::InvalidCurvature(k.to_f64()));
        }
        Ok(Curvature(k))
    }

    pub fn k(self) -> T {
        self.0
    }

    /// `-K > 0`.
    pub fn neg_k(self) -> T {
        -self.0
    }

    /// `sqrt(-K)`.
    pub fn sqrt_neg_k(self) -> T {
        (-self.0).sqrt()
    }

    /// Radius of the hyperboloid: `sqrt(-1/K)`, the time component of the origin.
    pub fn radius(self) -> T {
        (-self.0.recip()).sqrt()
    }
}

/// Tolerances controlling on-manifold checks and series switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Real> {
    /// Permitted `|K<x,x>_L - 1|` for a point to count as on-manifold.
    pub membership: T,
    /// Permitted `|<base,v>_L|` for a vector to count as tangent.
    pub orthogonality: T,
    /// Below this value of `alpha` (resp. `beta - 1`) the exp/log scalar
    /// factors use their two-term series instead of the closed form.
    pub taylor_switch: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            membership: T::default_membership_tol(),
            orthogonality: T::default_orthogonality_tol(),
            taylor_switch: T::default_taylor_switch(),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn validate(&self) -> Result<()> {
        if self.membership <= T::zero() || self.orthogonality <= T::zero() || self.taylor_switch <= T::zero() {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A point on the hyperboloid, stored as `[time, space...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint<T: Real> {
    coords: Vec<T>,
}

impl<T: Real> LorentzPoint<T> {
    /// Wraps coordinates without checking the manifold constraint. Callers
    /// must guarantee membership; constructors on [`LorentzModel`] validate.
    pub fn from_coords_unchecked(coords: Vec<T>) -> Self {
        debug_assert!(coords.len() >= 2);
        LorentzPoint { coords }
    }

    pub fn time(&self) -> T {
        self.coords[0]
    }

    pub fn space(&self) -> &[T] {
        &self.coords[1..]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Space dimension `n` (ambient dimension minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn coords_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }
}

/// An element of the tangent space at `base`: `<base, vec>_L = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T: Real> {
    base: LorentzPoint<T>,
    vec: Vec<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn base(&self) -> &LorentzPoint<T> {
        &self.base
    }

    pub fn vec(&self) -> &[T] {
        &self.vec
    }

    pub fn into_vec(self) -> Vec<T> {
        self.vec
    }

    pub fn is_finite(&self) -> bool {
        self.vec.iter().all(|c| c.is_finite())
    }

    /// Lorentzian norm of the tangent vector.
    pub fn norm(&self) -> T {
        lorentz_norm(&self.vec).expect("length checked at construction")
    }
}

/// Lorentzian inner product `-x_t y_t + x_s . y_s` of two ambient vectors.
pub fn lorentz_inner<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
    }
    Ok(lorentz_inner_unchecked(x, y))
}

/// As [`lorentz_inner`] but without the length check; used in hot loops.
#[inline]
pub fn lorentz_inner_unchecked<T: Real>(x: &[T], y: &[T]) -> T {
    let mut space = T::zero();
    for i in 1..x.len() {
        space += x[i] * y[i];
    }
    space - x[0] * y[0]
}

/// Lorentzian norm `sqrt(|<x,x>_L|)`.
pub fn lorentz_norm<T: Real>(x: &[T]) -> Result<T> {
    Ok(lorentz_inner(x, x)?.abs().sqrt())
}

/// The manifold: curvature plus the tolerances every check runs under.
///
/// All operations are pure; the model is cheap to copy around and safe to
/// share between threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzModel<T: Real> {
    curvature: Curvature<T>,
    tol: Tolerances<T>,
}

impl<T: Real> LorentzModel<T> {
    pub fn new(k: T) -> Result<Self> {
        Ok(LorentzModel { curvature: Curvature::new(k)?, tol: Tolerances::default() })
    }

    pub fn with_tolerances(k: T, tol: Tolerances<T>) -> Result<Self> {
        tol.validate()?;
        Ok(LorentzModel { curvature: Curvature::new(k)?, tol })
    }

    pub fn curvature(&self) -> Curvature<T> {
        self.curvature
    }

    pub fn k(&self) -> T {
        self.curvature.k()
    }

    pub fn tolerances(&self) -> Tolerances<T> {
        self.tol
    }

    /// The origin `[sqrt(-1/K), 0, ..., 0]` with `n` space dimensions.
    pub fn origin(&self, n: usize) -> LorentzPoint<T> {
        assert!(n >= 1, "space dimension must be at least 1");
        let mut coords = vec![T::zero(); n + 1];
        coords[0] = self.curvature.radius();
        LorentzPoint { coords }
    }

    /// Membership defect `|K<x,x>_L - 1|`, measured in f64 so that the
    /// yardstick does not inherit the rounding of a low-precision input.
    pub fn membership_defect(&self, coords: &[T]) -> f64 {
        let inner: f64 = {
            let mut space = 0.0f64;
            for c in &coords[1..] {
                let v = c.to_f64();
                space += v * v;
            }
            space - coords[0].to_f64() * coords[0].to_f64()
        };
        (self.k().to_f64() * inner - 1.0).abs()
    }

    /// Validates externally supplied coordinates. Points failing membership
    /// are rejected, never silently renormalized.
    pub fn point_from_coords(&self, coords: Vec<T>) -> Result<LorentzPoint<T>> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { op: "point_from_coords" });
        }
        if coords[0] <= T::zero() {
            return Err(Error::NonPositiveTime(coords[0].to_f64()));
        }
        let defect = self.membership_defect(&coords);
        let tolerance = self.tol.membership.to_f64();
        if defect > tolerance {
            return Err(Error::OffManifold { defect, tolerance });
        }
        Ok(LorentzPoint { coords })
    }

    /// Lifts space components onto the hyperboloid by recomputing the time
    /// component as `sqrt(||s||^2 - 1/K)`; exact up to rounding.
    pub fn lift_from_space(&self, space: &[T]) -> LorentzPoint<T> {
        let mut coords = Vec::with_capacity(space.len() + 1);
        coords.push(T::zero());
        coords.extend_from_slice(space);
        lift_in_place(self.k(), &mut coords);
        LorentzPoint { coords }
    }

    /// Divides by `sqrt(-K) ||x||_L`, projecting a time-like vector onto the
    /// hyperboloid. Errors when the vector is not time-like or points at the
    /// lower sheet.
    pub fn renormalize(&self, coords: &[T]) -> Result<LorentzPoint<T>> {
        let q = lorentz_inner(coords, coords)?;
        if q >= T::zero() {
            return Err(Error::NotTimeLike);
        }
        if coords[0] <= T::zero() {
            return Err(Error::NonPositiveTime(coords[0].to_f64()));
        }
        let denom = self.curvature.sqrt_neg_k() * q.abs().sqrt();
        let out: Vec<T> = coords.iter().map(|&c| c / denom).collect();
        Ok(LorentzPoint { coords: out })
    }

    /// Validates that `vec` is tangent at `base`.
    pub fn tangent_from_parts(&self, base: LorentzPoint<T>, vec: Vec<T>) -> Result<TangentVector<T>> {
        if vec.len() != base.coords.len() {
            return Err(Error::DimensionMismatch { expected: base.coords.len(), got: vec.len() });
        }
        let defect = lorentz_inner_unchecked(base.coords(), &vec);
        if defect.abs() > self.tol.orthogonality {
            return Err(Error::NotTangent { defect: defect.to_f64() });
        }
        Ok(TangentVector { base, vec })
    }

    /// Zero tangent vector at `base`.
    pub fn zero_tangent(&self, base: LorentzPoint<T>) -> TangentVector<T> {
        let vec = vec![T::zero(); base.coords.len()];
        TangentVector { base, vec }
    }

    /// Exponential map `exp_x(v) = cosh(a) x + sinh(a)/a v` with
    /// `a = sqrt(-K <v,v>_L)`.
    ///
    /// Requires a space-like or zero tangent vector; `sinh(a)/a` switches to
    /// `1 + a^2/6` below the Taylor threshold so `v = 0` maps to `x`.
    pub fn exp_map(&self, v: &TangentVector<T>) -> Result<LorentzPoint<T>> {
        let vv = lorentz_inner_unchecked(&v.vec, &v.vec);
        if vv < -self.tol.orthogonality {
            return Err(Error::InvalidTangent(vv.to_f64()));
        }
        let alpha = (self.curvature.neg_k() * vv.max(T::zero())).sqrt();
        let (c, s) = cosh_sinhc(alpha, self.tol.taylor_switch);
        let base = v.base.coords();
        let coords: Vec<T> = (0..base.len()).map(|i| c * base[i] + s * v.vec[i]).collect();
        debug_assert!(
            !coords[0].is_finite() || self.membership_defect(&coords) <= 1e-3,
            "exp_map output drifted off the manifold"
        );
        Ok(LorentzPoint { coords })
    }

    /// Logarithmic map `log_x(y) = acosh(b)/sqrt(b^2-1) (y - b x)` with
    /// `b = K<x,y>_L`, clamped to the `acosh` domain.
    ///
    /// For on-manifold inputs `b >= 1` holds exactly; in floating point it
    /// can land below 1, so `b` is clamped to `max(b, 1)` and the scalar
    /// factor switches to its series `1 - (b-1)/3` near 1. The clamped path
    /// never produces NaN; the diagnostic variant reports whether the clamp
    /// fired.
    pub fn log_map(&self, base: &LorentzPoint<T>, y: &LorentzPoint<T>) -> Result<TangentVector<T>> {
        self.log_map_diag(base, y).map(|(t, _)| t)
    }

    /// As [`Self::log_map`], also returning whether clamping fired.
    pub fn log_map_diag(
        &self,
        base: &LorentzPoint<T>,
        y: &LorentzPoint<T>,
    ) -> Result<(TangentVector<T>, bool)> {
        let beta_raw = self.k() * lorentz_inner(base.coords(), y.coords())?;
        let clamped = beta_raw < T::one();
        let beta = beta_raw.max(T::one());
        let factor = acosh_factor(beta, self.tol.taylor_switch);
        let b = base.coords();
        let vec: Vec<T> = (0..b.len()).map(|i| factor * (y.coords[i] - beta * b[i])).collect();
        Ok((TangentVector { base: base.clone(), vec }, clamped))
    }

    /// Reference log map without clamping or series switches, kept to
    /// reproduce the `acosh` domain failure: for `b < 1` (or exactly 1) the
    /// scalar factor is NaN. Never use this on a production path.
    pub fn log_map_unclamped(&self, base: &LorentzPoint<T>, y: &LorentzPoint<T>) -> Result<Vec<T>> {
        let beta = self.k() * lorentz_inner(base.coords(), y.coords())?;
        let factor = beta.acosh() / (beta * beta - T::one()).sqrt();
        let b = base.coords();
        Ok((0..b.len()).map(|i| factor * (y.coords[i] - beta * b[i])).collect())
    }

    /// Parallel transport of `z` (tangent at `x`) to the tangent space at `y`:
    /// `z + <y,z>_L / (-1/K - <x,y>_L) (x + y)`.
    pub fn parallel_transport(
        &self,
        x: &LorentzPoint<T>,
        y: &LorentzPoint<T>,
        z: &TangentVector<T>,
    ) -> Result<TangentVector<T>> {
        let denom = -self.k().recip() - lorentz_inner(x.coords(), y.coords())?;
        if denom.abs() < T::from_f64(1e-12) {
            return Err(Error::DegeneratePair);
        }
        let coef = lorentz_inner(y.coords(), z.vec())? / denom;
        let vec: Vec<T> = (0..z.vec.len())
            .map(|i| z.vec[i] + coef * (x.coords[i] + y.coords[i]))
            .collect();
        Ok(TangentVector { base: y.clone(), vec })
    }

    /// Isometry onto the Klein ball: `x_s / x_t`. Geodesics through the
    /// origin become Euclidean rays, which is what the colinearity checks
    /// exploit.
    pub fn to_klein(&self, x: &LorentzPoint<T>) -> Vec<T> {
        let t = x.time();
        x.space().iter().map(|&s| s / t).collect()
    }

    /// Isometry onto the Poincare ball: `x_s / (x_t + sqrt(-1/K))`.
    pub fn to_poincare(&self, x: &LorentzPoint<T>) -> Vec<T> {
        let denom = x.time() + self.curvature.radius();
        x.space().iter().map(|&s| s / denom).collect()
    }

    /// Squared Lorentzian distance `||x - y||_L^2 = 2/K - 2<x,y>_L`;
    /// non-negative, zero iff the points coincide.
    pub fn squared_lorentz_distance(&self, x: &LorentzPoint<T>, y: &LorentzPoint<T>) -> Result<T> {
        let two = T::from_f64(2.0);
        let inner = lorentz_inner(x.coords(), y.coords())?;
        Ok((two / self.k() - two * inner).max(T::zero()))
    }

    /// Geodesic distance `acosh(K<x,y>_L) / sqrt(-K)` with the argument
    /// clamped to the `acosh` domain.
    pub fn distance(&self, x: &LorentzPoint<T>, y: &LorentzPoint<T>) -> Result<T> {
        let beta = (self.k() * lorentz_inner(x.coords(), y.coords())?).max(T::one());
        Ok(beta.acosh() / self.curvature.sqrt_neg_k())
    }
}

/// Recomputes `coords[0] = sqrt(||coords[1..]||^2 - 1/K)` in place.
#[inline]
pub(crate) fn lift_in_place<T: Real>(k: T, coords: &mut [T]) {
    let mut norm_sq = T::zero();
    for c in &coords[1..] {
        norm_sq += *c * *c;
    }
    coords[0] = (norm_sq - k.recip()).sqrt();
}

/// `(cosh(a), sinh(a)/a)` with the series `1 + a^2/6` below the switch.
#[inline]
pub(crate) fn cosh_sinhc<T: Real>(alpha: T, switch: T) -> (T, T) {
    if alpha < switch {
        let a2 = alpha * alpha;
        let half = T::from_f64(0.5);
        let sixth = T::from_f64(1.0 / 6.0);
        (T::one() + half * a2, T::one() + sixth * a2)
    } else {
        (alpha.cosh(), alpha.sinh() / alpha)
    }
}

/// `acosh(b)/sqrt(b^2-1)` for `b >= 1`, with the series `1 - (b-1)/3` near 1.
#[inline]
pub(crate) fn acosh_factor<T: Real>(beta: T, switch: T) -> T {
    let excess = beta - T::one();
    if excess < switch {
        T::one() - excess / T::from_f64(3.0)
    } else {
        beta.acosh() / (beta * beta - T::one()).sqrt()
    }
}

/// Distance in the Poincare ball at curvature -1, as printed:
/// `acosh(1 + 2||x-y||^2 / ((1-||x||^2)(1-||y||^2)))`.
///
/// Rejects arguments on or outside the unit ball. See
/// [`poincare_distance_unchecked`] for the raw form that blows up near the
/// boundary.
pub fn poincare_distance<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let nx = dot(x, x);
    let ny = dot(y, y);
    if nx >= T::one() {
        return Err(Error::OutsideBall(nx.sqrt().to_f64()));
    }
    if ny >= T::one() {
        return Err(Error::OutsideBall(ny.sqrt().to_f64()));
    }
    let mut dd = T::zero();
    for i in 0..x.len() {
        let d = x[i] - y[i];
        dd += d * d;
    }
    let arg = (T::one() + T::from_f64(2.0) * dd / ((T::one() - nx) * (T::one() - ny))).max(T::one());
    Ok(arg.acosh())
}

/// Raw Poincare distance with no domain checks: when `||x||^2` rounds to 1
/// the denominator is zero and the result is Inf or NaN.
pub fn poincare_distance_unchecked<T: Real>(x: &[T], y: &[T]) -> T {
    let nx = dot(x, x);
    let ny = dot(y, y);
    let mut dd = T::zero();
    for i in 0..x.len() {
        let d = x[i] - y[i];
        dd += d * d;
    }
    (T::one() + T::from_f64(2.0) * dd / ((T::one() - nx) * (T::one() - ny))).acosh()
}

#[inline]
fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..x.len() {
        s += x[i] * y[i];
    }
    s
}
