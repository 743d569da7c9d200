//! Batched storage and kernels for the addition methods.
//!
//! Rows are stored contiguously, time component first, so the hot addition
//! loops stream each row sequentially. Kernels implement exactly the defining
//! composition of each method, one row at a time, with per-call scratch rows
//! instead of whole-batch intermediates.
//!
//! Every kernel is single-threaded when `threads == 1` (the benchmark
//! contract); larger values split the rows across that many OS threads.

use crate::error::Error;
use crate::geometry::{acosh_factor, cosh_sinhc, lift_in_place, lorentz_inner_unchecked, LorentzModel, LorentzPoint};
use crate::real::Real;
use crate::residual::ResidualWeights;
use crate::Result;

/// Dense batch of hyperboloid points, row-major `[time, space...]` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzBatch<T: Real> {
    dim: usize,
    rows: usize,
    data: Vec<T>,
}

impl<T: Real> LorentzBatch<T> {
    /// Allocates a zeroed batch; rows must be filled before use.
    pub fn zeros(dim: usize, rows: usize) -> Self {
        LorentzBatch { dim, rows, data: vec![T::zero(); rows * (dim + 1)] }
    }

    /// Fills a batch with Gaussian-lifted points; on-manifold by construction.
    pub fn sample_gaussian<R: rand::Rng>(
        model: &LorentzModel<T>,
        rng: &mut R,
        dim: usize,
        rows: usize,
        sigma: f64,
    ) -> Self {
        let mut batch = Self::zeros(dim, rows);
        for r in 0..rows {
            let row = batch.row_mut(r);
            for c in row[1..].iter_mut() {
                let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                *c = T::from_f64(g * sigma);
            }
            lift_in_place(model.k(), row);
        }
        batch
    }

    /// Validates every row against the model's membership tolerance.
    pub fn from_rows(model: &LorentzModel<T>, dim: usize, data: Vec<T>) -> Result<Self> {
        if dim < 1 || data.len() % (dim + 1) != 0 {
            return Err(Error::DimensionMismatch { expected: dim + 1, got: data.len() });
        }
        let batch = LorentzBatch { dim, rows: data.len() / (dim + 1), data };
        for r in 0..batch.rows {
            let row = batch.row(r);
            if row[0] <= T::zero() {
                return Err(Error::NonPositiveTime(row[0].to_f64()));
            }
            let defect = model.membership_defect(row);
            let tolerance = model.tolerances().membership.to_f64();
            if defect > tolerance {
                return Err(Error::OffManifold { defect, tolerance });
            }
        }
        Ok(batch)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, r: usize) -> &[T] {
        let w = self.dim + 1;
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let w = self.dim + 1;
        &mut self.data[r * w..(r + 1) * w]
    }

    pub fn row_point(&self, r: usize) -> LorentzPoint<T> {
        LorentzPoint::from_coords_unchecked(self.row(r).to_vec())
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Largest membership defect across rows, measured at f64.
    pub fn max_defect(&self, model: &LorentzModel<T>) -> f64 {
        (0..self.rows).map(|r| model.membership_defect(self.row(r))).fold(0.0, f64::max)
    }
}

/// Which addition a batched kernel applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddMethod {
    Lresnet,
    Pt,
    Ts,
    Sa,
}

impl AddMethod {
    pub const ALL: [AddMethod; 4] = [AddMethod::Lresnet, AddMethod::Pt, AddMethod::Ts, AddMethod::Sa];

    pub fn name(self) -> &'static str {
        match self {
            AddMethod::Lresnet => "lresnet",
            AddMethod::Pt => "pt",
            AddMethod::Ts => "ts",
            AddMethod::Sa => "sa",
        }
    }
}

impl std::str::FromStr for AddMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lresnet" => Ok(AddMethod::Lresnet),
            "pt" => Ok(AddMethod::Pt),
            "ts" => Ok(AddMethod::Ts),
            "sa" => Ok(AddMethod::Sa),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Applies `method` to every row pair of `x`, `y`, writing into `out`.
pub fn batch_add<T: Real>(
    model: &LorentzModel<T>,
    method: AddMethod,
    x: &LorentzBatch<T>,
    y: &LorentzBatch<T>,
    out: &mut LorentzBatch<T>,
    threads: usize,
) -> Result<()> {
    if x.dim != y.dim || x.rows != y.rows || x.dim != out.dim || x.rows != out.rows {
        return Err(Error::DimensionMismatch { expected: x.data.len(), got: y.data.len() });
    }
    let w = x.dim + 1;
    let run = |xs: &[T], ys: &[T], zs: &mut [T]| -> Result<()> {
        match method {
            AddMethod::Lresnet => {
                let weights = ResidualWeights::default();
                for ((xr, yr), zr) in xs.chunks_exact(w).zip(ys.chunks_exact(w)).zip(zs.chunks_exact_mut(w)) {
                    lresnet_row(model, xr, yr, zr, &weights);
                }
                Ok(())
            }
            AddMethod::Pt => {
                let mut scratch = PtScratch::new(w, model);
                for ((xr, yr), zr) in xs.chunks_exact(w).zip(ys.chunks_exact(w)).zip(zs.chunks_exact_mut(w)) {
                    pt_row(model, xr, yr, zr, &mut scratch)?;
                }
                Ok(())
            }
            AddMethod::Ts => {
                let mut scratch = TsScratch::new(w, model);
                for ((xr, yr), zr) in xs.chunks_exact(w).zip(ys.chunks_exact(w)).zip(zs.chunks_exact_mut(w)) {
                    ts_row(model, xr, yr, zr, T::one(), T::one(), &mut scratch);
                }
                Ok(())
            }
            AddMethod::Sa => {
                for ((xr, yr), zr) in xs.chunks_exact(w).zip(ys.chunks_exact(w)).zip(zs.chunks_exact_mut(w)) {
                    sa_row(model, xr, yr, zr);
                }
                Ok(())
            }
        }
    };

    if threads <= 1 {
        return run(&x.data, &y.data, &mut out.data);
    }

    let rows_per = x.rows.div_ceil(threads);
    let chunk = rows_per * w;
    let mut results: Vec<Result<()>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = x
            .data
            .chunks(chunk)
            .zip(y.data.chunks(chunk))
            .zip(out.data.chunks_mut(chunk))
            .map(|((xs, ys), zs)| scope.spawn(move || run(xs, ys, zs)))
            .collect();
        results = handles.into_iter().map(|h| h.join().expect("kernel thread panicked")).collect();
    });
    results.into_iter().collect()
}

#[inline]
fn lresnet_row<T: Real>(model: &LorentzModel<T>, x: &[T], y: &[T], z: &mut [T], w: &ResidualWeights<T>) {
    let (wx, wy) = (w.w_x(), w.w_y_abs());
    for i in 0..x.len() {
        z[i] = wx * x[i] + wy * y[i];
    }
    let q = -lorentz_inner_unchecked(z, z);
    debug_assert!((model.curvature().neg_k() * q).sqrt() >= (wx * wx + wy * wy).sqrt() * T::from_f64(1.0 - 1e-6));
    let denom = (model.curvature().neg_k() * q).sqrt();
    for v in z.iter_mut() {
        *v = *v / denom;
    }
}

struct PtScratch<T> {
    origin: Vec<T>,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> PtScratch<T> {
    fn new(w: usize, model: &LorentzModel<T>) -> Self {
        let mut origin = vec![T::zero(); w];
        origin[0] = model.curvature().radius();
        PtScratch { origin, u: vec![T::zero(); w], v: vec![T::zero(); w] }
    }
}

fn pt_row<T: Real>(model: &LorentzModel<T>, x: &[T], y: &[T], z: &mut [T], s: &mut PtScratch<T>) -> Result<()> {
    let o = &s.origin;
    let switch = model.tolerances().taylor_switch;

    // log at the origin, clamped
    let beta = (model.k() * lorentz_inner_unchecked(o, y)).max(T::one());
    let f = acosh_factor(beta, switch);
    for i in 0..y.len() {
        s.u[i] = f * (y[i] - beta * o[i]);
    }

    // transport origin -> x
    let denom = -model.k().recip() - lorentz_inner_unchecked(o, x);
    if denom.abs() < T::from_f64(1e-12) {
        return Err(Error::DegeneratePair);
    }
    let coef = lorentz_inner_unchecked(x, &s.u) / denom;
    for i in 0..x.len() {
        s.v[i] = s.u[i] + coef * (o[i] + x[i]);
    }

    // exponential at x
    let vv = lorentz_inner_unchecked(&s.v, &s.v).max(T::zero());
    let alpha = (model.curvature().neg_k() * vv).sqrt();
    let (c, snc) = cosh_sinhc(alpha, switch);
    let mut finite = true;
    for i in 0..x.len() {
        z[i] = c * x[i] + snc * s.v[i];
        finite &= z[i].is_finite();
    }
    if !finite {
        return Err(Error::NonFinite { op: "batch pt_add" });
    }
    Ok(())
}

struct TsScratch<T> {
    origin: Vec<T>,
    ux: Vec<T>,
    uy: Vec<T>,
}

impl<T: Real> TsScratch<T> {
    fn new(w: usize, model: &LorentzModel<T>) -> Self {
        let mut origin = vec![T::zero(); w];
        origin[0] = model.curvature().radius();
        TsScratch { origin, ux: vec![T::zero(); w], uy: vec![T::zero(); w] }
    }
}

fn ts_row<T: Real>(model: &LorentzModel<T>, x: &[T], y: &[T], z: &mut [T], wx: T, wy: T, s: &mut TsScratch<T>) {
    let o = &s.origin;
    let switch = model.tolerances().taylor_switch;

    let bx = (model.k() * lorentz_inner_unchecked(o, x)).max(T::one());
    let fx = acosh_factor(bx, switch);
    for i in 0..x.len() {
        s.ux[i] = fx * (x[i] - bx * o[i]);
    }
    let by = (model.k() * lorentz_inner_unchecked(o, y)).max(T::one());
    let fy = acosh_factor(by, switch);
    for i in 0..y.len() {
        s.uy[i] = fy * (y[i] - by * o[i]);
    }
    for i in 0..x.len() {
        s.ux[i] = wx * s.ux[i] + wy * s.uy[i];
    }
    let vv = lorentz_inner_unchecked(&s.ux, &s.ux).max(T::zero());
    let alpha = (model.curvature().neg_k() * vv).sqrt();
    let (c, snc) = cosh_sinhc(alpha, switch);
    for i in 0..x.len() {
        z[i] = c * o[i] + snc * s.ux[i];
    }
}

#[inline]
fn sa_row<T: Real>(model: &LorentzModel<T>, x: &[T], y: &[T], z: &mut [T]) {
    for i in 1..x.len() {
        z[i] = x[i] + y[i];
    }
    lift_in_place(model.k(), z);
}
