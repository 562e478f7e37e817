//! Sampled versions of the global estimates for convex functions on a
//! system: the mean-value bound, Poincaré and Rellich type constants, the
//! entropy bound, and an L¹ compactness smoke test.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::convexfn::{AffineFn, PiecewiseAffineConvex, State};
use crate::error::{Error, Result};
use crate::functionals::{entropy, exp_integrals, internal_energy};
use crate::linalg::{dot, norm};
use crate::polytope::{HalfSpace, Polytope, ToricSystem, DEFAULT_TOL};
use crate::quadrature::cells::{Cell, CellComplex};
use crate::quadrature::QuadratureConfig;
use crate::random::{random_nonneg_pa, substream};

/// Points closer than this to `∂P` are rejected by [`delta_p`].
pub const BOUNDARY_TOL: f64 = 1e-9;
pub const DEFAULT_DIRECTIONS: usize = 720;

/// Unit directions: evenly spaced angles for `n = 2`, a Fibonacci lattice
/// for `n = 3`, and fixed-seed Gaussian samples beyond.
pub fn direction_grid(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let l = norm(&v);
                    v.into_iter().map(|c| c / l).collect()
                })
                .collect()
        }
    }
}

/// `μ(P ∩ {ν·(y - x) ≥ 0})`.
pub fn cut_measure(sys: &ToricSystem, x: &[f64], nu: &[f64]) -> f64 {
    let mut hs = sys.polytope().halfspaces().to_vec();
    hs.push(HalfSpace::new(nu.to_vec(), -dot(nu, x)));
    match Polytope::from_halfspaces(&hs, DEFAULT_TOL) {
        Ok(p) => sys.interior_density() * p.volume(),
        Err(_) => 0.0,
    }
}

/// `δ_P(x)`: the least measure of a half of `P` cut by a hyperplane through
/// `x`, minimized over a direction grid.
pub fn delta_p(sys: &ToricSystem, x: &[f64], directions: usize) -> Result<f64> {
    if x.len() != sys.dim() {
        return Err(Error::InvalidInput("point has the wrong dimension".into()));
    }
    if sys.polytope().boundary_distance(x) <= BOUNDARY_TOL {
        return Err(Error::BoundaryPoint);
    }
    Ok(direction_grid(sys.dim(), directions)
        .iter()
        .map(|nu| cut_measure(sys, x, nu))
        .fold(f64::INFINITY, f64::min))
}

fn pa_integrals(sys: &ToricSystem, u: &PiecewiseAffineConvex) -> Result<(f64, f64)> {
    let cx = CellComplex::new(sys, &[u.pieces()])?;
    let f = |c: &Cell, x: &[f64]| u.pieces()[c.active[0]].eval(x);
    let num = QuadratureConfig::numeric();
    Ok((
        cx.integrate_volume(&f, &num)?.value,
        cx.integrate_boundary(&f, &num)?.value,
    ))
}

/// `(u(x), ∫_P u dμ / δ_P(x))` for convex `u ≥ 0`.
///
/// The cut through `x` orthogonal to the gradient of `u` is added to the
/// direction grid; on that side `u ≥ u(x)`, so the bound holds exactly
/// whatever the grid resolution.
pub fn mean_value_check(
    sys: &ToricSystem,
    u: &PiecewiseAffineConvex,
    x: &[f64],
    directions: usize,
) -> Result<(f64, f64)> {
    let lhs = u.eval(x);
    let (int_u, _) = pa_integrals(sys, u)?;
    if int_u <= 0.0 {
        return Ok((lhs, 0.0));
    }
    let mut delta = delta_p(sys, x, directions)?;
    let g = &u.pieces()[u.active_piece(x)].gradient;
    if norm(g) > 0.0 {
        delta = delta.min(cut_measure(sys, x, g));
    }
    Ok((lhs, int_u / delta))
}

/// Sampled sup of a ratio over convex functions.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateProbe {
    pub samples: usize,
    pub sup_ratio: f64,
    pub witness: PiecewiseAffineConvex,
    pub ratios: Vec<f64>,
}

/// `‖u‖_{L^p(dμ)} / ∫_∂P u dσ`.
pub fn poincare_ratio(sys: &ToricSystem, u: &PiecewiseAffineConvex, p: f64) -> Result<f64> {
    let cx = CellComplex::new(sys, &[u.pieces()])?;
    let num = QuadratureConfig::numeric();
    let up = |c: &Cell, x: &[f64]| u.pieces()[c.active[0]].eval(x).max(0.0).powf(p);
    let ub = |c: &Cell, x: &[f64]| u.pieces()[c.active[0]].eval(x);
    let lp = cx.integrate_volume(&up, &num)?.value.powf(1.0 / p);
    Ok(lp / cx.integrate_boundary(&ub, &num)?.value)
}

fn check_exponent(sys: &ToricSystem, p: f64) -> Result<()> {
    let n = sys.dim() as f64;
    let max = if sys.dim() == 1 {
        f64::INFINITY
    } else {
        n / (n - 1.0)
    };
    if !(p >= 1.0 && p <= max) {
        return Err(Error::InvalidInput(format!(
            "exponent {p} outside [1, {max}]"
        )));
    }
    if !sys.polytope().is_simple() {
        return Err(Error::InvalidInput(
            "estimates require a simple polytope".into(),
        ));
    }
    Ok(())
}

/// Largest Poincaré ratio over `trials` random nonnegative convex functions.
/// Trial `i` draws from its own substream of `seed`.
pub fn poincare_probe(
    sys: &ToricSystem,
    exponent: f64,
    trials: usize,
    seed: u64,
) -> Result<EstimateProbe> {
    check_exponent(sys, exponent)?;
    let samples: Vec<(f64, PiecewiseAffineConvex)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let u = random_nonneg_pa(sys, &mut substream(seed, i as u64))?;
            Ok((poincare_ratio(sys, &u, exponent)?, u))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (r, _)) in samples.iter().enumerate() {
        if *r > samples[best].0 {
            best = i;
        }
    }
    let ratios: Vec<f64> = samples.iter().map(|(r, _)| *r).collect();
    let (sup_ratio, witness) = samples
        .into_iter()
        .nth(best)
        .ok_or_else(|| Error::InvalidInput("at least one trial is required".into()))?;
    Ok(EstimateProbe {
        samples: trials,
        sup_ratio,
        witness,
        ratios,
    })
}

/// Hinges `max(0, t - s(y))` where `s` is the sum of normalized facet
/// distances at a vertex (or the distance to a single facet), at
/// geometrically spaced heights `t`.
fn hinge_battery(sys: &ToricSystem) -> Vec<PiecewiseAffineConvex> {
    let p = sys.polytope();
    let n = sys.dim();
    let hs = p.halfspaces();
    let unit = |i: usize| {
        let h = &hs[i];
        let l = h.norm();
        AffineFn::new(h.normal.iter().map(|a| a / l).collect(), h.offset / l)
    };
    let mut sums: Vec<AffineFn> = (0..hs.len()).map(unit).collect();
    for v in 0..p.vertices().len() {
        let fs = p.vertex_facets(v);
        let mut g = vec![0.0; n];
        let mut c = 0.0;
        for &i in fs {
            let l = unit(i);
            g.iter_mut().zip(&l.gradient).for_each(|(a, b)| *a += b);
            c += l.constant;
        }
        sums.push(AffineFn::new(g, c));
    }
    let mut out = Vec::new();
    for s in sums {
        let top = p.vertices().iter().map(|v| s.eval(v)).fold(0.0, f64::max);
        for k in 0..40 {
            let t = top * 0.5f64.powi(k);
            let neg: Vec<f64> = s.gradient.iter().map(|a| -a).collect();
            let hinge = AffineFn::new(neg, t - s.constant);
            out.push(
                PiecewiseAffineConvex::new(vec![AffineFn::constant_fn(n, 0.0), hinge]).unwrap(),
            );
        }
    }
    out
}

/// `Û(x) = max_u u(x) / ∫_∂P u dσ` over `u ≡ 1`, a deterministic hinge
/// battery and `fn_samples` random nonnegative convex functions.
pub fn rellich_majorant_probe(
    sys: &ToricSystem,
    x_samples: &[Vec<f64>],
    fn_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_exponent(sys, 1.0)?;
    let mut fns = vec![PiecewiseAffineConvex::constant(sys.dim(), 1.0)];
    fns.extend(hinge_battery(sys));
    for i in 0..fn_samples {
        fns.push(random_nonneg_pa(sys, &mut substream(seed, i as u64))?);
    }
    let weighted: Vec<(PiecewiseAffineConvex, f64)> = fns
        .into_par_iter()
        .map(|u| {
            let (_, b) = pa_integrals(sys, &u)?;
            Ok((u, b))
        })
        .collect::<Result<_>>()?;
    Ok(x_samples
        .iter()
        .map(|x| {
            weighted
                .iter()
                .filter(|(_, b)| *b > 0.0)
                .map(|(u, b)| u.eval(x) / b)
                .fold(0.0, f64::max)
        })
        .collect())
}

/// The entropy bound for `v = u / ∫dμ`, a convex density with `∫v dμ = 1`:
/// `∫v log v ≤ (p/(p-1)) log ‖v‖_p ≤ (p/(p-1)) log(Ĉ ∫_∂ v dσ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBound {
    pub lhs: f64,
    /// The Jensen step, which must always hold.
    pub jensen: f64,
    pub rhs: f64,
    /// `‖v‖_p / ∫_∂ v dσ`, compared with the empirical constant.
    pub ratio: f64,
    pub holds: bool,
    /// The empirical constant is below this state's own ratio, so a failure
    /// of the bound reflects the estimate of `Ĉ`, not the inequality.
    pub constant_binding: bool,
}

pub fn entropy_bound_check(
    sys: &ToricSystem,
    u: &State,
    exponent: f64,
    c_hat: f64,
    cfg: &QuadratureConfig,
) -> Result<EntropyBound> {
    if exponent <= 1.0 {
        return Err(Error::InvalidInput(
            "the entropy bound needs an exponent above 1".into(),
        ));
    }
    let (Some(q), Some(z)) = (u.q(), u.log_normalizer()) else {
        return Err(Error::InvalidInput(
            "entropy bound check expects a pure state".into(),
        ));
    };
    let log_vol = sys.volume().ln();
    let lhs = -entropy(sys, u, cfg)? - log_vol;
    let e = exp_integrals(sys, &q.scaled(exponent), cfg)?;
    let log_norm = (-exponent * z + e.log_z()) / exponent - log_vol;
    let bdry = internal_energy(sys, u, cfg)?;
    let k = exponent / (exponent - 1.0);
    let jensen = k * log_norm;
    let rhs = k * (c_hat * bdry).ln();
    let ratio = log_norm.exp() / bdry;
    Ok(EntropyBound {
        lhs,
        jensen,
        rhs,
        ratio,
        holds: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
        constant_binding: ratio > c_hat,
    })
}

/// `∫_P |a - b| dμ` for piecewise affine functions.
pub fn pa_l1_distance(
    sys: &ToricSystem,
    a: &PiecewiseAffineConvex,
    b: &PiecewiseAffineConvex,
) -> Result<f64> {
    let cx = CellComplex::new(sys, &[a.pieces(), b.pieces()])?;
    let f = |c: &Cell, x: &[f64]| {
        (a.pieces()[c.active[0]].eval(x) - b.pieces()[c.active[1]].eval(x)).abs()
    };
    Ok(cx.integrate_volume(&f, &QuadratureConfig::numeric())?.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessReport {
    /// Indices into the generated sequence, increasing.
    pub subsequence: Vec<usize>,
    /// Radius of the ball each member was drawn from; consecutive members
    /// share the earlier ball, so `gaps[k] ≤ 2 radii[k]`.
    pub radii: Vec<f64>,
    /// L¹ distances between consecutive subsequence members.
    pub gaps: Vec<f64>,
}

/// Draws `count` random nonnegative convex functions scaled to
/// `∫_∂P u dσ = bound` and extracts a subsequence greedily: at each step the
/// densest ball among the later terms is kept and the radius halves.
pub fn compactness_smoke(
    sys: &ToricSystem,
    count: usize,
    bound: f64,
    seed: u64,
) -> Result<CompactnessReport> {
    let fns: Vec<PiecewiseAffineConvex> = (0..count)
        .into_par_iter()
        .map(|i| {
            let u = random_nonneg_pa(sys, &mut substream(seed, i as u64))?;
            let (_, b) = pa_integrals(sys, &u)?;
            Ok(u.scaled(bound / b))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..count)
        .flat_map(|i| (i + 1..count).map(move |j| (i, j)))
        .collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| pa_l1_distance(sys, &fns[i], &fns[j]))
        .collect::<Result<_>>()?;
    let mut d = vec![vec![0.0; count]; count];
    for (&(i, j), v) in pairs.iter().zip(&dists) {
        d[i][j] = *v;
        d[j][i] = *v;
    }
    let mut active: Vec<usize> = (0..count).collect();
    let mut radius = 0.5 * dists.iter().copied().fold(0.0, f64::max);
    let mut subsequence: Vec<usize> = Vec::new();
    let mut radii = Vec::new();
    loop {
        if let Some(&last) = subsequence.last() {
            active.retain(|&j| j > last);
        }
        let Some(&center) = active.iter().max_by_key(|&&c| {
            (
                active.iter().filter(|&&j| d[c][j] <= radius).count(),
                std::cmp::Reverse(c),
            )
        }) else {
            break;
        };
        active.retain(|&j| d[center][j] <= radius);
        subsequence.push(active[0]);
        radii.push(radius);
        radius *= 0.5;
    }
    let gaps = subsequence.windows(2).map(|w| d[w[0]][w[1]]).collect();
    Ok(CompactnessReport {
        subsequence,
        radii,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup;
    use crate::convexfn::{linear_from_vector, normalize};
    use crate::polytope::cube;

    fn unit_square() -> ToricSystem {
        ToricSystem::lattice(cube(2, 0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn delta_of_square_center_and_segment() {
        let d = delta_p(&unit_square(), &[0.5, 0.5], 360).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        let seg = ToricSystem::lattice(cube(1, 0.0, 1.0).unwrap()).unwrap();
        assert!((delta_p(&seg, &[0.25], 2).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(delta_p(&seg, &[0.0], 2), Err(Error::BoundaryPoint));
    }

    #[test]
    fn delta_shrinks_toward_boundary() {
        let sys = blowup::system();
        let mut last = f64::INFINITY;
        for t in [0.0, 0.5, 0.9, 0.99] {
            // From the origin toward the vertex (2, -1).
            let x = [2.0 * t, -t];
            let d = delta_p(&sys, &x, 720).unwrap();
            assert!(d > 0.0 && d < last);
            last = d;
        }
    }

    #[test]
    fn mean_value_examples() {
        let sys = unit_square();
        let (l, r) =
            mean_value_check(&sys, &linear_from_vector(&[1.0, 1.0]), &[0.5, 0.5], 360).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-9);
        let (l, r) =
            mean_value_check(&sys, &PiecewiseAffineConvex::zero(2), &[0.3, 0.6], 360).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = mean_value_check(
            &sys,
            &PiecewiseAffineConvex::constant(2, 1.0),
            &[0.3, 0.6],
            360,
        )
        .unwrap();
        assert!(l == 1.0 && r >= 1.0);
    }

    #[test]
    fn poincare_ratio_of_constants() {
        assert!(
            (poincare_ratio(
                &unit_square(),
                &PiecewiseAffineConvex::constant(2, 1.0),
                2.0
            )
            .unwrap()
                - 0.25)
                .abs()
                < 1e-12
        );
        let sys = blowup::system();
        assert!(
            (poincare_ratio(&sys, &PiecewiseAffineConvex::constant(2, 1.0), 2.0).unwrap() - 0.25)
                .abs()
                < 1e-12
        );
        assert!(poincare_probe(&sys, 2.5, 1, 0).is_err());
    }

    #[test]
    fn poincare_probe_is_deterministic() {
        let sys = blowup::system();
        let a = poincare_probe(&sys, 2.0, 20, 9).unwrap();
        let b = poincare_probe(&sys, 2.0, 20, 9).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert!(a.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        assert_eq!(a.sup_ratio, a.ratios.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn rellich_majorant_grows_only_toward_vertices() {
        let sys = unit_square();
        let center = rellich_majorant_probe(&sys, &[vec![0.5, 0.5]], 10, 1).unwrap();
        assert!(center[0] >= 0.25);
        let facet: Vec<Vec<f64>> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| vec![0.5, e])
            .collect();
        let vertex: Vec<Vec<f64>> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| vec![e, e])
            .collect();
        let f = rellich_majorant_probe(&sys, &facet, 0, 1).unwrap();
        let v = rellich_majorant_probe(&sys, &vertex, 0, 1).unwrap();
        assert!(f.iter().all(|x| *x < 2.0), "{f:?}");
        assert!(v.windows(2).all(|w| w[1] > 1.5 * w[0]), "{v:?}");
    }

    #[test]
    fn entropy_bound_jensen_step() {
        let sys = blowup::system();
        let cfg = QuadratureConfig::default();
        let u = normalize(&sys, &linear_from_vector(&[0.7, -1.1]), &cfg).unwrap();
        let b = entropy_bound_check(&sys, &u, 2.0, 1.0, &cfg).unwrap();
        assert!(b.lhs <= b.jensen + 1e-12);
        let at_ratio = entropy_bound_check(&sys, &u, 2.0, b.ratio, &cfg).unwrap();
        assert!((at_ratio.rhs - at_ratio.jensen).abs() < 1e-12 && at_ratio.holds);
    }

    #[test]
    fn compactness_subsequence_contracts() {
        let sys = unit_square();
        let r = compactness_smoke(&sys, 24, 1.0, 4).unwrap();
        assert!(r.subsequence.windows(2).all(|w| w[0] < w[1]));
        for (k, g) in r.gaps.iter().enumerate() {
            assert!(*g <= 2.0 * r.radii[k] + 1e-12);
        }
    }
}
