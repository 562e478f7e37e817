//! Seeded random piecewise affine convex functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::convexfn::{AffineFn, PiecewiseAffineConvex};
use crate::error::Result;
use crate::polytope::ToricSystem;

pub const MAX_PIECES: usize = 8;
pub const GRADIENT_SCALE: f64 = 3.0;

/// Independent generator for sample `index` of a run seeded by `seed`, so
/// results do not depend on the order samples are drawn in.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Max of `m ~ U{1..8}` affine pieces with `N(0, 3²)` gradients and
/// constants, not normalized.
pub fn random_pa<R: Rng>(dim: usize, rng: &mut R) -> PiecewiseAffineConvex {
    let normal = Normal::new(0.0, GRADIENT_SCALE).unwrap();
    let m = rng.random_range(1..=MAX_PIECES);
    let pieces = (0..m)
        .map(|_| {
            let g = (0..dim).map(|_| normal.sample(rng)).collect();
            AffineFn::new(g, normal.sample(rng))
        })
        .collect();
    PiecewiseAffineConvex::new(pieces).expect("nonempty finite pieces")
}

/// A random convex function shifted so its minimum over `P` is 0.
pub fn random_nonneg_pa<R: Rng>(sys: &ToricSystem, rng: &mut R) -> Result<PiecewiseAffineConvex> {
    let q = random_pa(sys.dim(), rng);
    let min = q.min_on(sys)?;
    q.shifted(-min).pruned(sys)
}

/// A uniformly distributed interior point, by rejection from the bounding box.
pub fn random_interior_point<R: Rng>(sys: &ToricSystem, margin: f64, rng: &mut R) -> Vec<f64> {
    let verts = sys.polytope().vertices();
    let n = sys.dim();
    let lo: Vec<f64> = (0..n)
        .map(|k| verts.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|k| verts.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    loop {
        let x: Vec<f64> = (0..n).map(|k| rng.random_range(lo[k]..hi[k])).collect();
        if sys.polytope().boundary_distance(&x) > margin {
            return x;
        }
    }
}
