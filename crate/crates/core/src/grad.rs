//! Analytic first derivatives with a central finite-difference oracle.
//!
//! With `u = w_x x + |w_y| y`, `G = diag(-1, 1, ..., 1)` and
//! `z = u / (sqrt(-K) ||u||_L)`, the differential of the normalization is
//!
//! ```text
//! dz/du = (I - u (Gu)^T / <u,u>_L) / (sqrt(-K) ||u||_L)
//! ```
//!
//! chain-ruled into `x`, `y` and `w_y`. Everything here runs at f64; it backs
//! the toy network's training loop.

use crate::error::Error;
use crate::geometry::{lorentz_inner_unchecked, LorentzModel, LorentzPoint};
use crate::residual::ResidualWeights;
use crate::Result;

/// Dense row-major matrix of partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Jacobian { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut j = Self::zeros(n, n);
        for i in 0..n {
            j.data[i * n + i] = 1.0;
        }
        j
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `J * v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Largest relative entry difference, comparing absolutely below `floor`.
    pub fn max_relative_error(&self, other: &Jacobian, floor: f64) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let scale = a.abs().max(b.abs());
                if scale > floor {
                    (a - b).abs() / scale
                } else {
                    (a - b).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Central-difference Jacobian `(f(p + h e_i) - f(p - h e_i)) / 2h`, one
/// column per input coordinate.
pub fn fd_oracle<F>(f: F, point: &[f64], step: f64) -> Jacobian
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let out_dim = f(point).len();
    let mut jac = Jacobian::zeros(out_dim, point.len());
    let mut probe = point.to_vec();
    for c in 0..point.len() {
        probe[c] = point[c] + step;
        let plus = f(&probe);
        probe[c] = point[c] - step;
        let minus = f(&probe);
        probe[c] = point[c];
        for r in 0..out_dim {
            jac.set(r, c, (plus[r] - minus[r]) / (2.0 * step));
        }
    }
    jac
}

/// Jacobians of the weighted centroid connection.
#[derive(Debug, Clone)]
pub struct LresnetJacobians {
    /// Derivative of the output with respect to `x` ((n+1) x (n+1)).
    pub j_x: Jacobian,
    /// Derivative with respect to `y`.
    pub j_y: Jacobian,
    /// Gradient with respect to the raw weight `w_y`.
    pub g_wy: Vec<f64>,
    /// True when `w_y == 0`: the subgradient 0 was returned at the kink of
    /// the absolute value.
    pub at_kink: bool,
}

/// Analytic derivatives of `lresnet_add` with respect to both points and the
/// raw `w_y` weight.
pub fn lresnet_jacobians(
    model: &LorentzModel<f64>,
    x: &LorentzPoint<f64>,
    y: &LorentzPoint<f64>,
    w: &ResidualWeights<f64>,
) -> Result<LresnetJacobians> {
    if x.coords().len() != y.coords().len() {
        return Err(Error::DimensionMismatch { expected: x.coords().len(), got: y.coords().len() });
    }
    let d1 = x.coords().len();
    let (wx, wy_abs) = (w.w_x(), w.w_y_abs());
    let u: Vec<f64> = x.coords().iter().zip(y.coords()).map(|(&a, &b)| wx * a + wy_abs * b).collect();
    let m = normalization_jacobian(model, &u);

    let mut j_x = m.clone();
    for v in j_x.data.iter_mut() {
        *v *= wx;
    }
    let mut j_y = m.clone();
    for v in j_y.data.iter_mut() {
        *v *= wy_abs;
    }

    let at_kink = w.w_y() == 0.0;
    let g_wy = if at_kink {
        vec![0.0; d1]
    } else {
        let sign = w.w_y().signum();
        m.apply(y.coords()).into_iter().map(|v| sign * v).collect()
    };

    Ok(LresnetJacobians { j_x, j_y, g_wy, at_kink })
}

/// `dz/du` for the normalization `z = u / (sqrt(-K) ||u||_L)`.
pub(crate) fn normalization_jacobian(model: &LorentzModel<f64>, u: &[f64]) -> Jacobian {
    let d1 = u.len();
    let inner = lorentz_inner_unchecked(u, u); // negative for time-like u
    let denom = (model.curvature().neg_k() * -inner).sqrt();
    let mut m = Jacobian::zeros(d1, d1);
    for r in 0..d1 {
        for c in 0..d1 {
            let gu_c = if c == 0 { -u[0] } else { u[c] };
            let eye = if r == c { 1.0 } else { 0.0 };
            m.set(r, c, (eye - u[r] * gu_c / inner) / denom);
        }
    }
    m
}

/// Derivative of a hyperbolic layer `x_s -> [sqrt(||W x_s||^2 - 1/K), W x_s]`
/// with respect to the input space components. `weight` is row-major
/// `n_out x n_in`. The time row is `(W x_s)^T W / y_t`.
pub fn hl_layer_jacobian(
    model: &LorentzModel<f64>,
    weight: &[f64],
    n_out: usize,
    n_in: usize,
    x: &LorentzPoint<f64>,
) -> Result<Jacobian> {
    if weight.len() != n_out * n_in {
        return Err(Error::DimensionMismatch { expected: n_out * n_in, got: weight.len() });
    }
    if x.dim() != n_in {
        return Err(Error::DimensionMismatch { expected: n_in, got: x.dim() });
    }
    let xs = x.space();
    let ys: Vec<f64> = (0..n_out)
        .map(|r| (0..n_in).map(|c| weight[r * n_in + c] * xs[c]).sum())
        .collect();
    let yt = (ys.iter().map(|v| v * v).sum::<f64>() - model.k().recip()).sqrt();

    let mut jac = Jacobian::zeros(n_out + 1, n_in);
    for c in 0..n_in {
        let mut dt = 0.0;
        for r in 0..n_out {
            let w_rc = weight[r * n_in + c];
            jac.set(r + 1, c, w_rc);
            dt += ys[r] * w_rc;
        }
        jac.set(0, c, dt / yt);
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LorentzModel;
    use crate::sampling::{rng_from_seed, sample_point};

    const FD_STEP: f64 = 1e-5;

    fn model() -> LorentzModel<f64> {
        LorentzModel::new(-1.0).unwrap()
    }

    #[test]
    fn fd_oracle_on_identity_is_identity() {
        let j = fd_oracle(|p| p.to_vec(), &[0.3, -1.0, 2.5], FD_STEP);
        let err = j.max_relative_error(&Jacobian::identity(3), 1e-8);
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn lresnet_jacobians_match_fd() {
        let m = model();
        let mut rng = rng_from_seed(1);
        for trial in 0..100 {
            let dim = 2 + (trial % 5);
            let x = sample_point(&m, &mut rng, dim, 1.0);
            let y = sample_point(&m, &mut rng, dim, 1.0);
            let w = ResidualWeights::new(1.0, 0.2 + 0.01 * trial as f64).unwrap();
            let jacs = lresnet_jacobians(&m, &x, &y, &w).unwrap();

            let fd_x = fd_oracle(
                |p| {
                    let px = LorentzPoint::from_coords_unchecked(p.to_vec());
                    crate::residual::lresnet_add(&m, &px, &y, &w).unwrap().coords().to_vec()
                },
                x.coords(),
                FD_STEP,
            );
            assert!(jacs.j_x.max_relative_error(&fd_x, 1e-8) < 1e-4, "trial {trial}");

            let fd_y = fd_oracle(
                |p| {
                    let py = LorentzPoint::from_coords_unchecked(p.to_vec());
                    crate::residual::lresnet_add(&m, &x, &py, &w).unwrap().coords().to_vec()
                },
                y.coords(),
                FD_STEP,
            );
            assert!(jacs.j_y.max_relative_error(&fd_y, 1e-8) < 1e-4, "trial {trial}");

            let fd_w = fd_oracle(
                |p| {
                    let ww = ResidualWeights::new(1.0, p[0]).unwrap();
                    crate::residual::lresnet_add(&m, &x, &y, &ww).unwrap().coords().to_vec()
                },
                &[w.w_y()],
                FD_STEP,
            );
            for (a, b) in jacs.g_wy.iter().zip(fd_w.data.iter()) {
                let scale = a.abs().max(b.abs()).max(1e-8);
                assert!((a - b).abs() / scale < 1e-4, "trial {trial}");
            }
        }
    }

    #[test]
    fn directional_derivative_along_u_vanishes() {
        let m = model();
        let mut rng = rng_from_seed(2);
        let x = sample_point(&m, &mut rng, 4, 1.0);
        let y = sample_point(&m, &mut rng, 4, 1.0);
        let w = ResidualWeights::new(1.0, 0.8).unwrap();
        let u: Vec<f64> = x.coords().iter().zip(y.coords()).map(|(&a, &b)| a + 0.8 * b).collect();
        let ju = normalization_jacobian(&m, &u).apply(&u);
        assert!(ju.iter().all(|v| v.abs() < 1e-12), "{ju:?}");
    }

    #[test]
    fn symmetric_inputs_give_equal_jacobians() {
        let m = model();
        let x = sample_point(&m, &mut rng_from_seed(3), 3, 1.0);
        let jacs = lresnet_jacobians(&m, &x, &x, &ResidualWeights::default()).unwrap();
        for (a, b) in jacs.j_x.data.iter().zip(&jacs.j_y.data) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn subgradient_zero_at_kink() {
        let m = model();
        let mut rng = rng_from_seed(4);
        let x = sample_point(&m, &mut rng, 3, 1.0);
        let y = sample_point(&m, &mut rng, 3, 1.0);
        let jacs = lresnet_jacobians(&m, &x, &y, &ResidualWeights::new(1.0, 0.0).unwrap()).unwrap();
        assert!(jacs.at_kink);
        assert!(jacs.g_wy.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn output_perturbations_stay_tangent() {
        let m = model();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let x = sample_point(&m, &mut rng, 5, 1.0);
            let y = sample_point(&m, &mut rng, 5, 1.0);
            let w = ResidualWeights::new(1.0, 0.6).unwrap();
            let z = crate::residual::lresnet_add(&m, &x, &y, &w).unwrap();
            let jacs = lresnet_jacobians(&m, &x, &y, &w).unwrap();
            let delta: Vec<f64> = (0..6).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let moved = jacs.j_x.apply(&delta);
            let inner = lorentz_inner_unchecked(z.coords(), &moved);
            assert!(inner.abs() < 1e-8, "tangency violated: {inner}");
        }
    }

    #[test]
    fn hl_jacobian_identity_weight_is_lift_jacobian() {
        let m = model();
        let x = m.lift_from_space(&[0.5, -1.25]);
        let eye = Jacobian::identity(2);
        let j = hl_layer_jacobian(&m, &eye.data, 2, 2, &x).unwrap();
        let fd = fd_oracle(
            |s| m.lift_from_space(s).coords().to_vec(),
            x.space(),
            FD_STEP,
        );
        assert!(j.max_relative_error(&fd, 1e-8) < 1e-4);
    }

    #[test]
    fn hl_jacobian_matches_fd_on_random_weights() {
        let m = model();
        let mut rng = rng_from_seed(6);
        for trial in 0..100 {
            let (n_in, n_out) = (2 + trial % 4, 2 + (trial / 2) % 4);
            let weight: Vec<f64> = (0..n_in * n_out).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let x = sample_point(&m, &mut rng, n_in, 1.0);
            let j = hl_layer_jacobian(&m, &weight, n_out, n_in, &x).unwrap();
            let fd = fd_oracle(
                |s| {
                    let ys: Vec<f64> = (0..n_out)
                        .map(|r| (0..n_in).map(|c| weight[r * n_in + c] * s[c]).sum())
                        .collect();
                    m.lift_from_space(&ys).coords().to_vec()
                },
                x.space(),
                FD_STEP,
            );
            assert!(j.max_relative_error(&fd, 1e-8) < 1e-4, "trial {trial}");
        }
    }

    #[test]
    fn hl_time_row_formula() {
        let m = model();
        let weight = vec![0.3, -1.0, 0.7, 2.0, 0.1, -0.4];
        let x = m.lift_from_space(&[1.0, -0.5]);
        let j = hl_layer_jacobian(&m, &weight, 3, 2, &x).unwrap();
        // time row = (W x_s)^T W / y_t, written out by hand
        let xs = x.space();
        let ys: Vec<f64> = (0..3).map(|r| weight[r * 2] * xs[0] + weight[r * 2 + 1] * xs[1]).collect();
        let yt = (ys.iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt();
        for c in 0..2 {
            let expect: f64 = (0..3).map(|r| ys[r] * weight[r * 2 + c]).sum::<f64>() / yt;
            assert!((j.get(0, c) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_space_jacobian_is_gamma_identity() {
        let m = model();
        let gamma = crate::residual::ScaleFactor::new(2.0).unwrap();
        let x = m.lift_from_space(&[0.4, 1.3, -0.2]);
        let fd = fd_oracle(
            |s| {
                let p = m.lift_from_space(s);
                crate::residual::scale(&m, &p, gamma).space().to_vec()
            },
            x.space(),
            FD_STEP,
        );
        let mut expect = Jacobian::identity(3);
        for v in expect.data.iter_mut() {
            *v *= 2.0;
        }
        assert!(fd.max_relative_error(&expect, 1e-8) < 1e-8);
    }
}
