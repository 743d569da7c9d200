//! The four hyperbolic residual connection methods and the optional scaling.
//!
//! * `lresnet_add`: `(w_x x + |w_y| y) / (sqrt(-K) ||w_x x + |w_y| y||_L)` —
//!   a weighted Lorentzian centroid, computed in O(n) with a single norm
//!   evaluation. Commutative for equal weights; only the ratio `w_y/w_x`
//!   matters.
//! * `pt_add`: `exp_x ∘ P_{o→x} ∘ log_o (y)` — the parallel transport method.
//! * `ts_add`: `exp_o(w_x log_o(x) + w_y log_o(y))` — tangent space addition.
//! * `space_add`: add space components, recompute the time component.
//! * `scale`: `[sqrt(||g m_s||^2 - 1/K), g m_s]` — slides a point along its
//!   Klein ray through the origin.

use crate::error::Error;
use crate::geometry::{lift_in_place, lorentz_inner_unchecked, LorentzModel, LorentzPoint};
use crate::real::Real;
use crate::Result;

/// Residual weights: `w_x` is a fixed positive constant, `w_y` is free and
/// consumed through its absolute value so the effective weight pair stays in
/// the feasible domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualWeights<T: Real> {
    w_x: T,
    w_y: T,
}

impl<T: Real> Default for ResidualWeights<T> {
    fn default() -> Self {
        ResidualWeights { w_x: T::one(), w_y: T::one() }
    }
}

impl<T: Real> ResidualWeights<T> {
    pub fn new(w_x: T, w_y: T) -> Result<Self> {
        if !w_x.is_finite() || w_x <= T::zero() {
            return Err(Error::InvalidWeight("w_x must be finite and > 0"));
        }
        if !w_y.is_finite() {
            return Err(Error::InvalidWeight("w_y must be finite"));
        }
        Ok(ResidualWeights { w_x, w_y })
    }

    pub fn w_x(&self) -> T {
        self.w_x
    }

    /// Raw, possibly negative `w_y`.
    pub fn w_y(&self) -> T {
        self.w_y
    }

    /// The effective second weight `|w_y|`.
    pub fn w_y_abs(&self) -> T {
        self.w_y.abs()
    }
}

/// Positive scaling constant for [`scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor<T: Real>(T);

impl<T: Real> ScaleFactor<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !gamma.is_finite() || gamma <= T::zero() {
            return Err(Error::InvalidWeight("gamma must be finite and > 0"));
        }
        Ok(ScaleFactor(gamma))
    }

    pub fn gamma(self) -> T {
        self.0
    }
}

/// Weighted centroid residual connection.
///
/// The denominator is bounded below by `sqrt(w_x^2 + w_y^2) / sqrt(-K)` for
/// on-manifold inputs (asserted in debug builds), so the division never
/// approaches zero.
pub fn lresnet_add<T: Real>(
    model: &LorentzModel<T>,
    x: &LorentzPoint<T>,
    y: &LorentzPoint<T>,
    w: &ResidualWeights<T>,
) -> Result<LorentzPoint<T>> {
    check_same_dim(x, y)?;
    let (wx, wy) = (w.w_x(), w.w_y_abs());
    let u: Vec<T> = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(&a, &b)| wx * a + wy * b)
        .collect();
    let q = -lorentz_inner_unchecked(&u, &u);
    debug_assert!(
        (model.curvature().neg_k() * q).sqrt() > (wx * wx + wy * wy).sqrt() * T::from_f64(1.0 - 1e-9),
        "stability bound violated"
    );
    let denom = (model.curvature().neg_k() * q).sqrt();
    let coords: Vec<T> = u.into_iter().map(|c| c / denom).collect();
    Ok(LorentzPoint::from_coords_unchecked(coords))
}

/// k-ary generalization of [`lresnet_add`]: normalize the weighted sum of any
/// number of points. Weights must be non-negative with a positive total.
pub fn weighted_centroid<T: Real>(
    model: &LorentzModel<T>,
    points: &[&LorentzPoint<T>],
    weights: &[T],
) -> Result<LorentzPoint<T>> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty points/weights, got {}/{}",
            points.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::InvalidWeight("centroid weights must be non-negative"));
    }
    if weights.iter().fold(T::zero(), |a, &b| a + b) <= T::zero() {
        return Err(Error::InvalidWeight("centroid weights must not all be zero"));
    }
    let d1 = points[0].coords().len();
    let mut u = vec![T::zero(); d1];
    for (p, &w) in points.iter().zip(weights) {
        if p.coords().len() != d1 {
            return Err(Error::DimensionMismatch { expected: d1, got: p.coords().len() });
        }
        for (acc, &c) in u.iter_mut().zip(p.coords()) {
            *acc += w * c;
        }
    }
    let q = -lorentz_inner_unchecked(&u, &u);
    let denom = (model.curvature().neg_k() * q).sqrt();
    let coords: Vec<T> = u.into_iter().map(|c| c / denom).collect();
    Ok(LorentzPoint::from_coords_unchecked(coords))
}

/// Parallel transport addition `exp_x(P_{o→x}(log_o(y)))`.
///
/// Non-finite outputs are surfaced as errors rather than silently returned;
/// a degenerate transport pair propagates as an error too.
pub fn pt_add<T: Real>(
    model: &LorentzModel<T>,
    x: &LorentzPoint<T>,
    y: &LorentzPoint<T>,
) -> Result<LorentzPoint<T>> {
    check_same_dim(x, y)?;
    let o = model.origin(x.dim());
    let u = model.log_map(&o, y)?;
    let v = model.parallel_transport(&o, x, &u)?;
    let z = model.exp_map(&v)?;
    if !z.is_finite() {
        return Err(Error::NonFinite { op: "pt_add" });
    }
    Ok(z)
}

/// Reference variant of [`pt_add`] built on the unclamped log map. Reproduces
/// the published behaviour of the baseline, including its NaN failures; the
/// output is returned as-is.
pub fn pt_add_unclamped<T: Real>(
    model: &LorentzModel<T>,
    x: &LorentzPoint<T>,
    y: &LorentzPoint<T>,
) -> Result<LorentzPoint<T>> {
    check_same_dim(x, y)?;
    let o = model.origin(x.dim());
    let raw = model.log_map_unclamped(&o, y)?;
    // transport and exponentiate without tangency validation: NaN must flow
    // through unchanged.
    let denom = -model.k().recip() - lorentz_inner_unchecked(o.coords(), x.coords());
    let coef = lorentz_inner_unchecked(x.coords(), &raw) / denom;
    let v: Vec<T> = (0..raw.len()).map(|i| raw[i] + coef * (o.coords()[i] + x.coords()[i])).collect();
    let vv = lorentz_inner_unchecked(&v, &v);
    let alpha = (model.curvature().neg_k() * vv).sqrt();
    let (c, s) = (alpha.cosh(), alpha.sinh() / alpha);
    let coords: Vec<T> = (0..v.len()).map(|i| c * x.coords()[i] + s * v[i]).collect();
    Ok(LorentzPoint::from_coords_unchecked(coords))
}

/// Tangent space addition `exp_o(w_x log_o(x) + w_y log_o(y))` with strictly
/// positive weights.
pub fn ts_add<T: Real>(
    model: &LorentzModel<T>,
    x: &LorentzPoint<T>,
    y: &LorentzPoint<T>,
    w_x: T,
    w_y: T,
) -> Result<LorentzPoint<T>> {
    check_same_dim(x, y)?;
    if w_x <= T::zero() || w_y <= T::zero() || !w_x.is_finite() || !w_y.is_finite() {
        return Err(Error::InvalidWeight("ts_add weights must be finite and > 0"));
    }
    let o = model.origin(x.dim());
    let ux = model.log_map(&o, x)?;
    let uy = model.log_map(&o, y)?;
    let sum: Vec<T> = ux
        .vec()
        .iter()
        .zip(uy.vec())
        .map(|(&a, &b)| w_x * a + w_y * b)
        .collect();
    let t = model.tangent_from_parts(o, sum)?;
    model.exp_map(&t)
}

/// Space-like dimension addition: `[sqrt(||x_s + y_s||^2 - 1/K), x_s + y_s]`.
pub fn space_add<T: Real>(
    model: &LorentzModel<T>,
    x: &LorentzPoint<T>,
    y: &LorentzPoint<T>,
) -> Result<LorentzPoint<T>> {
    check_same_dim(x, y)?;
    let mut coords = vec![T::zero(); x.coords().len()];
    for i in 1..coords.len() {
        coords[i] = x.coords()[i] + y.coords()[i];
    }
    lift_in_place(model.k(), &mut coords);
    Ok(LorentzPoint::from_coords_unchecked(coords))
}

/// Norm scaling `[sqrt(||g m_s||^2 - 1/K), g m_s]`: the Klein image of the
/// output is a positive multiple of the Klein image of the input.
pub fn scale<T: Real>(
    model: &LorentzModel<T>,
    m: &LorentzPoint<T>,
    gamma: ScaleFactor<T>,
) -> LorentzPoint<T> {
    let g = gamma.gamma();
    let mut coords = vec![T::zero(); m.coords().len()];
    for i in 1..coords.len() {
        coords[i] = g * m.coords()[i];
    }
    lift_in_place(model.k(), &mut coords);
    LorentzPoint::from_coords_unchecked(coords)
}

#[inline]
fn check_same_dim<T: Real>(x: &LorentzPoint<T>, y: &LorentzPoint<T>) -> Result<()> {
    if x.coords().len() != y.coords().len() {
        return Err(Error::DimensionMismatch {
            expected: x.coords().len(),
            got: y.coords().len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LorentzModel<f64> {
        LorentzModel::new(-1.0).unwrap()
    }

    fn pt2(m: &LorentzModel<f64>, t: f64, a: f64, b: f64) -> LorentzPoint<f64> {
        m.point_from_coords(vec![t, a, b]).unwrap()
    }

    #[test]
    fn lresnet_idempotent() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let w = ResidualWeights::new(1.0, 0.7).unwrap();
        let z = lresnet_add(&m, &x, &x, &w).unwrap();
        for (a, b) in z.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lresnet_worked_example() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = pt2(&m, 3.0, 2.0, 2.0);
        let z = lresnet_add(&m, &x, &y, &ResidualWeights::default()).unwrap();
        let s = 20f64.sqrt();
        let expect = [6.0 / s, 4.0 / s, 0.0];
        for (a, b) in z.coords().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{z:?}");
        }
        assert!((z.coords()[0] - 1.341641).abs() < 1e-6);
        assert!((z.coords()[1] - 0.894427).abs() < 1e-6);
        assert!(m.membership_defect(z.coords()) < 1e-12);
    }

    #[test]
    fn lresnet_ratio_invariance() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = m.lift_from_space(&[0.4, 1.1]);
        for c in [0.25, 1.0, 13.0] {
            let a = lresnet_add(&m, &x, &y, &ResidualWeights::new(1.0, 0.6).unwrap()).unwrap();
            let b = lresnet_add(&m, &x, &y, &ResidualWeights::new(c, c * 0.6).unwrap()).unwrap();
            for (p, q) in a.coords().iter().zip(b.coords()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lresnet_negative_wy_uses_absolute_value() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = m.lift_from_space(&[0.4, 1.1]);
        let a = lresnet_add(&m, &x, &y, &ResidualWeights::new(1.0, 0.6).unwrap()).unwrap();
        let b = lresnet_add(&m, &x, &y, &ResidualWeights::new(1.0, -0.6).unwrap()).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn weight_validation() {
        assert!(ResidualWeights::new(0.0, 1.0).is_err());
        assert!(ResidualWeights::new(-1.0, 1.0).is_err());
        assert!(ResidualWeights::new(1.0, f64::NAN).is_err());
        assert!(ResidualWeights::new(1.0, 0.0).is_ok()); // w_y may be zero
        assert!(ScaleFactor::new(0.0).is_err());
        assert!(ScaleFactor::new(2.0).is_ok());
    }

    #[test]
    fn pt_add_paper_pair() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = pt2(&m, 3.0, 2.0, 2.0);
        let z = pt_add(&m, &x, &y).unwrap();
        for (a, b) in z.coords().iter().zip(&[9.0, 8.0, -4.0]) {
            assert!((a - b).abs() < 1e-9, "{z:?}");
        }
        let z = pt_add(&m, &y, &x).unwrap();
        for (a, b) in z.coords().iter().zip(&[9.0, 8.0, 4.0]) {
            assert!((a - b).abs() < 1e-9, "{z:?}");
        }
    }

    #[test]
    fn pt_add_origin_is_identity() {
        let m = model();
        let x = m.lift_from_space(&[0.3, -1.7]);
        let o = m.origin(2);
        let z = pt_add(&m, &x, &o).unwrap();
        for (a, b) in z.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ts_add_examples() {
        let m = model();
        let o = m.origin(2);
        let z = ts_add(&m, &o, &o, 0.5, 0.5).unwrap();
        for (a, b) in z.coords().iter().zip(o.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        // x = y with weights summing to one returns x
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let z = ts_add(&m, &x, &x, 0.25, 0.75).unwrap();
        for (a, b) in z.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(ts_add(&m, &x, &x, 0.0, 1.0).is_err());
        assert!(ts_add(&m, &x, &x, 1.0, -1.0).is_err());
    }

    #[test]
    fn ts_add_worked_pair() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = pt2(&m, 3.0, 2.0, 2.0);
        let z = ts_add(&m, &x, &y, 1.0, 1.0).unwrap();
        // Frozen from a 50-digit step-by-step evaluation of the composition.
        let expect = [6.089493001864067, 6.006823205301738, 0.0];
        for (a, b) in z.coords().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{z:?}");
        }
        // Independent transcription of the same composition: with both inputs
        // having time component 3, the tangent sum is c*[0,4,0] with
        // c = acosh(3)/sqrt(8), and exp_o gives [cosh(4c), sinh(4c), 0].
        let c = 3f64.acosh() / 8f64.sqrt();
        assert!((z.coords()[0] - (4.0 * c).cosh()).abs() < 1e-12);
        assert!((z.coords()[1] - (4.0 * c).sinh()).abs() < 1e-12);
        assert!(m.membership_defect(z.coords()) < 1e-12);
    }

    #[test]
    fn space_add_examples() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = pt2(&m, 3.0, 2.0, 2.0);
        let z = space_add(&m, &x, &y).unwrap();
        assert!((z.coords()[0] - 17f64.sqrt()).abs() < 1e-12);
        assert!((z.coords()[0] - 4.123106).abs() < 1e-6);
        assert_eq!(&z.coords()[1..], &[4.0, 0.0]);
        let o = m.origin(2);
        let z = space_add(&m, &o, &o).unwrap();
        assert_eq!(z.coords(), o.coords());
        // commutes
        let a = space_add(&m, &x, &y).unwrap();
        let b = space_add(&m, &y, &x).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn scale_examples() {
        let m = model();
        let p = m.lift_from_space(&[0.894427, 0.0]);
        let same = scale(&m, &p, ScaleFactor::new(1.0).unwrap());
        for (a, b) in same.coords().iter().zip(p.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        let doubled = scale(&m, &p, ScaleFactor::new(2.0).unwrap());
        assert!((doubled.coords()[0] - 4.2f64.sqrt()).abs() < 1e-6);
        assert!((doubled.coords()[1] - 1.788854).abs() < 1e-6);
        // Klein images are positive multiples of each other
        let k1 = m.to_klein(&p);
        let k2 = m.to_klein(&doubled);
        let ratio = k2[0] / k1[0];
        assert!(ratio > 0.0);
    }

    #[test]
    fn centroid_matches_pairwise_for_two_points() {
        let m = model();
        let x = pt2(&m, 3.0, 2.0, -2.0);
        let y = m.lift_from_space(&[0.4, 1.1]);
        let a = lresnet_add(&m, &x, &y, &ResidualWeights::new(1.0, 0.3).unwrap()).unwrap();
        let b = weighted_centroid(&m, &[&x, &y], &[1.0, 0.3]).unwrap();
        for (p, q) in a.coords().iter().zip(b.coords()) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!(weighted_centroid(&m, &[&x], &[0.0]).is_err());
        assert!(weighted_centroid(&m, &[&x, &y], &[1.0]).is_err());
    }
}
