//! Seeded on-manifold sampling.
//!
//! Points are drawn by sampling space components i.i.d. Gaussian with a
//! configurable sigma and lifting onto the hyperboloid. Normals are always
//! generated at f64 and converted, so the f32 and f64 streams for a given
//! seed describe the same underlying points.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{LorentzModel, LorentzPoint};
use crate::real::Real;

/// The deterministic RNG used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian space components, `sigma`-scaled.
pub fn sample_space<T: Real, R: Rng>(rng: &mut R, dim: usize, sigma: f64) -> Vec<T> {
    (0..dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            T::from_f64(g * sigma)
        })
        .collect()
}

/// A random on-manifold point: Gaussian space components lifted.
pub fn sample_point<T: Real, R: Rng>(
    model: &LorentzModel<T>,
    rng: &mut R,
    dim: usize,
    sigma: f64,
) -> LorentzPoint<T> {
    let space = sample_space::<T, _>(rng, dim, sigma);
    model.lift_from_space(&space)
}

/// A mirrored pair: identical space components except for a negated last
/// coordinate. Lifting makes the time components equal, so the pair satisfies
/// `x_i = y_i` for all i except the last, where `x_last = -y_last`.
pub fn sample_mirrored_pair<T: Real, R: Rng>(
    model: &LorentzModel<T>,
    rng: &mut R,
    dim: usize,
    sigma: f64,
) -> (LorentzPoint<T>, LorentzPoint<T>) {
    assert!(dim >= 2, "mirrored pairs need at least two space dimensions");
    let mut space = sample_space::<T, _>(rng, dim, sigma);
    let x = model.lift_from_space(&space);
    let last = space.len() - 1;
    space[last] = -space[last];
    let y = model.lift_from_space(&space);
    (x, y)
}
