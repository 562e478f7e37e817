//! Convex functions on a polytope (maxima of affine functions), their smooth
//! surrogates, and the normalized states `u(q)` they induce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::ToricSystem;
use crate::quadrature::cells::{pa_exp_integrals, CellComplex};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFn {
    pub gradient: Vec<f64>,
    pub constant: f64,
}

impl AffineFn {
    pub fn new(gradient: Vec<f64>, constant: f64) -> Self {
        Self { gradient, constant }
    }

    pub fn constant_fn(dim: usize, c: f64) -> Self {
        Self {
            gradient: vec![0.0; dim],
            constant: c,
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.gradient, x) + self.constant
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.gradient.iter().all(|g| g.is_finite())
    }
}

/// `q(x) = max_i ℓ_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecesJson", into = "PiecesJson")]
pub struct PiecewiseAffineConvex {
    pieces: Vec<AffineFn>,
}

#[derive(Serialize, Deserialize)]
struct PiecesJson {
    pieces: Vec<AffineFn>,
}

impl TryFrom<PiecesJson> for PiecewiseAffineConvex {
    type Error = Error;
    fn try_from(p: PiecesJson) -> Result<Self> {
        Self::new(p.pieces)
    }
}

impl From<PiecewiseAffineConvex> for PiecesJson {
    fn from(q: PiecewiseAffineConvex) -> Self {
        PiecesJson { pieces: q.pieces }
    }
}

impl PiecewiseAffineConvex {
    pub fn new(pieces: Vec<AffineFn>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidInput("piecewise affine function needs a piece".into()))?;
        let n = first.dim();
        if pieces.iter().any(|p| p.dim() != n) {
            return Err(Error::InvalidInput(
                "pieces have different dimensions".into(),
            ));
        }
        if pieces.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite piece".into()));
        }
        Ok(Self { pieces })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            pieces: vec![AffineFn::constant_fn(dim, c)],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializes")
    }

    pub fn pieces(&self) -> &[AffineFn] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of a maximal piece at `x` (lowest index on ties).
    pub fn active_piece(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, p) in self.pieces.iter().enumerate() {
            let v = p.eval(x);
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| AffineFn::new(p.gradient.clone(), p.constant + c))
                .collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        assert!(t >= 0.0, "only nonnegative multiples stay convex");
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| AffineFn::new(p.gradient.iter().map(|g| t * g).collect(), t * p.constant))
                .collect(),
        }
    }

    /// Gauge representative with largest piece constant equal to 0.
    pub fn recentred(&self) -> Self {
        let m = self
            .pieces
            .iter()
            .map(|p| p.constant)
            .fold(f64::NEG_INFINITY, f64::max);
        self.shifted(-m)
    }

    /// `q + r`, with pieces `ℓ_i + ℓ'_j`.
    pub fn sum(&self, other: &Self) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                let g = a
                    .gradient
                    .iter()
                    .zip(&b.gradient)
                    .map(|(x, y)| x + y)
                    .collect();
                pieces.push(AffineFn::new(g, a.constant + b.constant));
            }
        }
        Self { pieces }
    }

    /// `(x, y) ↦ q(x) + r(y)` on a product space.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                let mut g = a.gradient.clone();
                g.extend_from_slice(&b.gradient);
                pieces.push(AffineFn::new(g, a.constant + b.constant));
            }
        }
        Self { pieces }
    }

    /// Maximum over `P`, attained at a vertex.
    pub fn max_on(&self, sys: &ToricSystem) -> f64 {
        sys.polytope()
            .vertices()
            .iter()
            .map(|v| self.eval(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum over `P`, attained at a vertex of some linearity cell.
    pub fn min_on(&self, sys: &ToricSystem) -> Result<f64> {
        let cx = CellComplex::new(sys, &[&self.pieces])?;
        Ok(cx.min_over_vertices(|_, v| self.eval(v)))
    }

    /// Drops pieces whose linearity cell in `P` has zero volume.
    pub fn pruned(&self, sys: &ToricSystem) -> Result<Self> {
        let cx = CellComplex::new(sys, &[&self.pieces])?;
        let mut keep: Vec<usize> = cx
            .cells
            .iter()
            .filter(|c| {
                c.simplices.iter().map(|s| s.volume).sum::<f64>() > 1e-14 * sys.polytope().volume()
            })
            .map(|c| c.active[0])
            .collect();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Ok(self.clone());
        }
        Ok(Self {
            pieces: keep.into_iter().map(|i| self.pieces[i].clone()).collect(),
        })
    }
}

/// `⟨ξ⟩`, the linear function `x ↦ ξ·x`.
pub fn linear_from_vector(xi: &[f64]) -> PiecewiseAffineConvex {
    PiecewiseAffineConvex {
        pieces: vec![AffineFn::new(xi.to_vec(), 0.0)],
    }
}

/// Log-sum-exp surrogate `(1/β) log Σ e^{β ℓ_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedConvex {
    pub base: PiecewiseAffineConvex,
    pub beta: f64,
}

impl SmoothedConvex {
    pub fn new(base: PiecewiseAffineConvex, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput("sharpness must be positive".into()));
        }
        Ok(Self { base, beta })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let vals: Vec<f64> = self.base.pieces.iter().map(|p| p.eval(x)).collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + vals
            .iter()
            .map(|v| (self.beta * (v - m)).exp())
            .sum::<f64>()
            .ln()
            / self.beta
    }

    /// Softmax weights of the pieces at `x`.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self.base.pieces.iter().map(|p| p.eval(x)).collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = vals.iter().map(|v| (self.beta * (v - m)).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let w = self.weights(x);
        let mut g = vec![0.0; self.base.dim()];
        for (wi, p) in w.iter().zip(&self.base.pieces) {
            for (gk, pk) in g.iter_mut().zip(&p.gradient) {
                *gk += wi * pk;
            }
        }
        g
    }
}

/// One exponential component `weight · e^{q - log_normalizer}` of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub q: PiecewiseAffineConvex,
    pub log_normalizer: f64,
    pub weight: f64,
}

/// A normalized log-convex density on `P`: `∫_P u dμ = ∫_P dμ`.
///
/// Normally `u = e^{q - z}` for a single convex `q`; convex combinations of
/// such states are kept as weighted sums of their components.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    components: Vec<Component>,
    volume: f64,
    mass: f64,
}

impl State {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// The convex potential when the state is a single exponential.
    pub fn q(&self) -> Option<&PiecewiseAffineConvex> {
        match self.components.as_slice() {
            [c] => Some(&c.q),
            _ => None,
        }
    }

    pub fn log_normalizer(&self) -> Option<f64> {
        match self.components.as_slice() {
            [c] => Some(c.log_normalizer),
            _ => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1
    }

    /// `∫_P dμ` of the underlying system.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `∫_P u dμ` as computed at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.components[0].q.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.q.eval(x) - c.log_normalizer).exp())
            .sum()
    }

    pub fn log_eval(&self, x: &[f64]) -> f64 {
        self.eval(x).ln()
    }

    /// All affine piece lists, for building a common cell refinement.
    pub fn piece_lists(&self) -> Vec<&[AffineFn]> {
        self.components.iter().map(|c| c.q.pieces()).collect()
    }
}

/// `u(q) = (∫_P dμ / ∫_P e^q dμ) e^q`.
pub fn normalize(
    sys: &ToricSystem,
    q: &PiecewiseAffineConvex,
    cfg: &QuadratureConfig,
) -> Result<State> {
    if q.dim() != sys.dim() {
        return Err(Error::InvalidInput(format!(
            "function of dimension {} on a {}-dimensional system",
            q.dim(),
            sys.dim()
        )));
    }
    let e = pa_exp_integrals(sys, q.pieces(), cfg, false)?;
    let vol = sys.volume();
    let z = e.log_z() - vol.ln();
    let mass = e.z * (e.shift - z).exp();
    Ok(State {
        components: vec![Component {
            q: q.clone(),
            log_normalizer: z,
            weight: 1.0,
        }],
        volume: vol,
        mass,
    })
}

/// `u ≡ 1`.
pub fn trivial_state(sys: &ToricSystem) -> State {
    let vol = sys.volume();
    State {
        components: vec![Component {
            q: PiecewiseAffineConvex::zero(sys.dim()),
            log_normalizer: 0.0,
            weight: 1.0,
        }],
        volume: vol,
        mass: vol,
    }
}

/// `(1 - t) u0 + t u1`.
pub fn mixture(u0: &State, u1: &State, t: f64) -> Result<State> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "mixture parameter {t} outside [0, 1]"
        )));
    }
    if u0.dim() != u1.dim() || (u0.volume - u1.volume).abs() > 1e-12 * u0.volume {
        return Err(Error::InvalidInput(
            "states live on different systems".into(),
        ));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    if t == 1.0 {
        return Ok(u1.clone());
    }
    let mut components = Vec::with_capacity(u0.components.len() + u1.components.len());
    for c in &u0.components {
        components.push(Component {
            weight: (1.0 - t) * c.weight,
            ..c.clone()
        });
    }
    for c in &u1.components {
        components.push(Component {
            weight: t * c.weight,
            ..c.clone()
        });
    }
    Ok(State {
        components,
        volume: u0.volume,
        mass: (1.0 - t) * u0.mass + t * u1.mass,
    })
}

/// `∫_P |u - v| dμ`, by adaptive quadrature on the common refinement of the
/// two states' linearity cells.
pub fn l1_distance(sys: &ToricSystem, u: &State, v: &State, cfg: &QuadratureConfig) -> Result<f64> {
    let mut lists = u.piece_lists();
    lists.extend(v.piece_lists());
    let cx = CellComplex::new(sys, &lists)?;
    let f = |_: &crate::quadrature::cells::Cell, x: &[f64]| (u.eval(x) - v.eval(x)).abs();
    Ok(cx.integrate_volume(&f, cfg)?.value)
}

/// Grid approximation of `sup{ℓ affine : ℓ ≤ q on ∂P}`.
///
/// Candidate gradients are the pieces' own gradients plus a uniform grid with
/// `grid` points per axis over the bounding box of those gradients; each
/// candidate gets the largest constant keeping it below `q` at boundary
/// sample points. Candidates never maximal at a sample point are dropped.
pub fn tight_envelope(
    sys: &ToricSystem,
    q: &PiecewiseAffineConvex,
    grid: usize,
) -> Result<PiecewiseAffineConvex> {
    let n = sys.dim();
    let cx = CellComplex::new(sys, &[q.pieces()])?;
    let mut bdry_pts: Vec<Vec<f64>> = sys.polytope().vertices().to_vec();
    for c in &cx.cells {
        for (_, s) in &c.boundary {
            bdry_pts.extend(s.vertices.iter().cloned());
            bdry_pts.push(s.centroid());
        }
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in q.pieces() {
        for k in 0..n {
            lo[k] = lo[k].min(p.gradient[k]);
            hi[k] = hi[k].max(p.gradient[k]);
        }
    }
    let mut grads: Vec<Vec<f64>> = q.pieces().iter().map(|p| p.gradient.clone()).collect();
    let g = grid.max(1);
    let mut idx = vec![0usize; n];
    'outer: loop {
        let point = (0..n)
            .map(|k| {
                if g == 1 {
                    0.5 * (lo[k] + hi[k])
                } else {
                    lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (g - 1) as f64
                }
            })
            .collect();
        grads.push(point);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == n {
                break 'outer;
            }
        }
    }
    let candidates: Vec<AffineFn> = grads
        .into_iter()
        .map(|gr| {
            let c = bdry_pts
                .iter()
                .map(|x| q.eval(x) - linalg::dot(&gr, x))
                .fold(f64::INFINITY, f64::min);
            AffineFn::new(gr, c)
        })
        .collect();
    let mut samples = bdry_pts;
    for c in &cx.cells {
        samples.extend(c.vertices.iter().cloned());
        for s in &c.simplices {
            samples.push(s.centroid());
        }
    }
    let mut keep = vec![false; candidates.len()];
    for x in &samples {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, l) in candidates.iter().enumerate() {
            let v = l.eval(x);
            if v > val + 1e-12 {
                val = v;
                best = i;
            }
        }
        keep[best] = true;
    }
    let pieces = candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(l, k)| k.then_some(l))
        .collect();
    PiecewiseAffineConvex::new(pieces)
}

/// Lowers `q` near the vertex `v` of a polygon to the value `h`, replacing it
/// on a triangle at `v` by the plane through `(v, h)` that touches `q` along
/// both edges at `v`.
pub fn vertex_truncate(
    sys: &ToricSystem,
    q: &PiecewiseAffineConvex,
    v: usize,
    h: f64,
) -> Result<PiecewiseAffineConvex> {
    let p = sys.polytope();
    if p.dim() != 2 {
        return Err(Error::InvalidInput(
            "vertex truncation is defined for polygons".into(),
        ));
    }
    let vx = p
        .vertices()
        .get(v)
        .ok_or_else(|| Error::InvalidInput(format!("no vertex {v}")))?
        .clone();
    let qv = q.eval(&vx);
    if h > qv {
        return Err(Error::InvalidInput(format!("h = {h} exceeds q(v) = {qv}")));
    }
    if h == qv {
        return Ok(q.clone());
    }
    let mut touch = Vec::with_capacity(2);
    for &f in p.vertex_facets(v) {
        let other = *p
            .facet_vertices(f)
            .iter()
            .find(|&&w| w != v)
            .expect("edge has two vertices");
        touch.push(edge_touch_point(q, &vx, &p.vertices()[other], h));
    }
    // Plane through (v, h), (p0, q(p0)), (p1, q(p1)).
    let d0 = linalg::sub(&touch[0], &vx);
    let d1 = linalg::sub(&touch[1], &vx);
    let r0 = q.eval(&touch[0]) - h;
    let r1 = q.eval(&touch[1]) - h;
    let grad = linalg::solve_square(&[&d0, &d1], &[r0, r1], 1e-14).ok_or_else(|| {
        Error::SlopeCondition("touching points are collinear with the vertex".into())
    })?;
    let lh = AffineFn::new(grad.clone(), h - linalg::dot(&grad, &vx));
    let cx = CellComplex::new(sys, &[q.pieces()])?;
    let tol = 1e-9 * (1.0 + qv.abs());
    let excess = cx.max_over_vertices(|_, x| lh.eval(x) - q.eval(x));
    if excess > tol {
        return Err(Error::SlopeCondition(format!(
            "the touching plane exceeds q by {excess:.3e}; q is not steep enough at the vertex"
        )));
    }
    let mut pieces = vec![lh];
    pieces.extend(
        q.pieces()
            .iter()
            .filter(|l| l.eval(&vx) <= h + tol)
            .cloned(),
    );
    PiecewiseAffineConvex::new(pieces)
}

/// On the edge `γ(t) = (1-t) v + t w`, the point closest to `v` minimizing
/// `(q(γ(t)) - h) / t`; by convexity it is a breakpoint of `q` or `w`.
fn edge_touch_point(q: &PiecewiseAffineConvex, v: &[f64], w: &[f64], h: f64) -> Vec<f64> {
    let d = linalg::sub(w, v);
    let mut ts = vec![1.0];
    let pieces = q.pieces();
    for a in 0..pieces.len() {
        for b in a + 1..pieces.len() {
            // Crossing of ℓ_a and ℓ_b along the edge.
            let sa = linalg::dot(&pieces[a].gradient, &d);
            let sb = linalg::dot(&pieces[b].gradient, &d);
            if (sa - sb).abs() < 1e-14 {
                continue;
            }
            let t = (pieces[b].eval(v) - pieces[a].eval(v)) / (sa - sb);
            if t > 1e-12 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let at = |t: f64| -> Vec<f64> { v.iter().zip(&d).map(|(a, b)| a + t * b).collect() };
    let mut best_t = 1.0;
    let mut best = f64::INFINITY;
    for &t in &ts {
        let r = (q.eval(&at(t)) - h) / t;
        if r < best - 1e-12 * (1.0 + r.abs()) {
            best = r;
            best_t = t;
        }
    }
    at(best_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{cube, HalfSpace, Polytope, DEFAULT_TOL};
    use std::f64::consts::E;

    fn blowup() -> ToricSystem {
        let hs = [
            HalfSpace::new(vec![0.0, 1.0], 1.0),
            HalfSpace::new(vec![-1.0, -1.0], 1.0),
            HalfSpace::new(vec![1.0, 0.0], 1.0),
            HalfSpace::new(vec![1.0, 1.0], 1.0),
        ];
        ToricSystem::lattice(Polytope::from_halfspaces(&hs, DEFAULT_TOL).unwrap()).unwrap()
    }

    fn unit_segment() -> ToricSystem {
        ToricSystem::lattice(cube(1, 0.0, 1.0).unwrap()).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn normalize_constant_is_trivial() {
        let sys = blowup();
        for c in [0.0, 3.5, -40.0] {
            let u = normalize(&sys, &PiecewiseAffineConvex::constant(2, c), &cfg()).unwrap();
            for x in [[0.0, 0.0], [1.0, -0.5], [-1.0, 2.0]] {
                assert!((u.eval(&x) - 1.0).abs() < 1e-13);
            }
            assert!((u.mass() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_segment_exponential() {
        let sys = unit_segment();
        let u = normalize(&sys, &linear_from_vector(&[1.0]), &cfg()).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((u.eval(&[x]) - x.exp() / (E - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let sys = unit_segment();
        let u0 = trivial_state(&sys);
        let u1 = normalize(&sys, &linear_from_vector(&[1.0]), &cfg()).unwrap();
        assert_eq!(mixture(&u0, &u1, 0.0).unwrap(), u0);
        assert_eq!(mixture(&u0, &u1, 1.0).unwrap(), u1);
        let m = mixture(&u0, &u1, 0.5).unwrap();
        for x in [0.0, 0.25, 0.9] {
            assert!((m.eval(&[x]) - 0.5 * (1.0 + x.exp() / (E - 1.0))).abs() < 1e-14);
        }
        assert!((m.mass() - 1.0).abs() < 1e-14);
        assert!(mixture(&u0, &u1, 1.5).is_err());
    }

    #[test]
    fn l1_distance_on_segment() {
        // The densities cross at x* = log(e - 1).
        let sys = unit_segment();
        let u0 = trivial_state(&sys);
        let u1 = normalize(&sys, &linear_from_vector(&[1.0]), &cfg()).unwrap();
        let xs = (E - 1.0).ln();
        let below = xs - (xs.exp() - 1.0) / (E - 1.0);
        let above = (E - xs.exp()) / (E - 1.0) - (1.0 - xs);
        let d = l1_distance(&sys, &u0, &u1, &QuadratureConfig::numeric()).unwrap();
        assert!((d - (below + above)).abs() < 1e-9, "{d}");
        assert!(l1_distance(&sys, &u1, &u1, &cfg()).unwrap() < 1e-15);
    }

    #[test]
    fn linear_from_vector_values() {
        assert_eq!(linear_from_vector(&[0.0, 0.0]).eval(&[3.0, 4.0]), 0.0);
        assert_eq!(linear_from_vector(&[1.0, 1.0]).eval(&[2.0, -1.0]), 1.0);
        assert_eq!(linear_from_vector(&[1.0, 0.0]).eval(&[0.25, 0.75]), 0.25);
    }

    #[test]
    fn smoothing_bounds() {
        let q = PiecewiseAffineConvex::new(vec![
            AffineFn::new(vec![1.0, 0.0], 0.0),
            AffineFn::new(vec![-1.0, 2.0], 0.5),
            AffineFn::new(vec![0.0, -1.0], 0.1),
        ])
        .unwrap();
        let x = [0.3, 0.2];
        let mut last = f64::INFINITY;
        for beta in [1.0, 4.0, 16.0, 64.0, 256.0] {
            let s = SmoothedConvex::new(q.clone(), beta).unwrap();
            let v = s.eval(&x);
            assert!(v >= q.eval(&x) - 1e-15);
            assert!(v <= q.eval(&x) + 3f64.ln() / beta + 1e-15);
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert!(SmoothedConvex::new(q, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let q = PiecewiseAffineConvex::from_json(
            r#"{"pieces":[{"gradient":[1,0],"constant":0.5},{"gradient":[0,-2],"constant":0}]}"#,
        )
        .unwrap();
        assert_eq!(q.pieces().len(), 2);
        let again = PiecewiseAffineConvex::from_json(&q.to_json()).unwrap();
        assert_eq!(q, again);
        assert!(PiecewiseAffineConvex::from_json(r#"{"pieces":[]}"#).is_err());
    }

    #[test]
    fn envelope_of_affine_is_itself() {
        let sys = blowup();
        let q = PiecewiseAffineConvex::new(vec![AffineFn::new(vec![0.7, -1.3], 0.2)]).unwrap();
        let e = tight_envelope(&sys, &q, 7).unwrap();
        for x in [[0.0, 0.0], [1.5, -0.9], [-0.8, 1.2], [0.3, 0.1]] {
            assert!((e.eval(&x) - q.eval(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_of_hinge_on_segment_is_chord() {
        // On [0,1] the boundary is {0, 1}; the tightest affine majorant of the
        // boundary data of max(0, 2x - 1) is the chord x.
        let sys = unit_segment();
        let q = PiecewiseAffineConvex::new(vec![
            AffineFn::new(vec![0.0], 0.0),
            AffineFn::new(vec![2.0], -1.0),
        ])
        .unwrap();
        let e = tight_envelope(&sys, &q, 5).unwrap();
        for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!(
                (e.eval(&[x]) - x).abs() < 1e-12,
                "x = {x}: {}",
                e.eval(&[x])
            );
        }
    }

    fn steep_at_bottom_vertex() -> (ToricSystem, PiecewiseAffineConvex, usize) {
        let sys = blowup();
        let q = PiecewiseAffineConvex::new(vec![
            AffineFn::new(vec![0.0, 0.0], 0.0),
            // 10 - 10x - 20(y + 1)
            AffineFn::new(vec![-10.0, -20.0], -10.0),
        ])
        .unwrap();
        let v = sys
            .polytope()
            .vertices()
            .iter()
            .position(|w| w[0] == 0.0 && w[1] == -1.0)
            .unwrap();
        (sys, q, v)
    }

    #[test]
    fn truncation_at_vertex() {
        let (sys, q, v) = steep_at_bottom_vertex();
        assert_eq!(q.eval(&[0.0, -1.0]), 10.0);
        let t = vertex_truncate(&sys, &q, v, 5.0).unwrap();
        assert!((t.eval(&[0.0, -1.0]) - 5.0).abs() < 1e-12);
        // Plane through (v, 5), (1, -1, 0), (-1, 0, 0): 5 - 5x - 10(y + 1).
        let lh = |x: f64, y: f64| 5.0 - 5.0 * x - 10.0 * (y + 1.0);
        let inside = |x: f64, y: f64| -10.0 * x - 20.0 * (y + 1.0) + 10.0 >= 0.0;
        for i in 0..=30 {
            for j in 0..=30 {
                let x = -1.0 + 3.0 * i as f64 / 30.0;
                let y = -1.0 + 3.0 * j as f64 / 30.0;
                if !sys.polytope().contains(&[x, y], 1e-12) {
                    continue;
                }
                let tv = t.eval(&[x, y]);
                assert!(tv <= q.eval(&[x, y]) + 1e-12);
                let expect = if inside(x, y) {
                    lh(x, y)
                } else {
                    q.eval(&[x, y])
                };
                assert!((tv - expect).abs() < 1e-12, "({x}, {y})");
            }
        }
    }

    #[test]
    fn truncation_trivial_and_affine_cases() {
        let (sys, q, v) = steep_at_bottom_vertex();
        assert_eq!(vertex_truncate(&sys, &q, v, 10.0).unwrap(), q);
        let affine = linear_from_vector(&[1.0, 1.0]);
        let r = vertex_truncate(&sys, &affine, v, -2.0);
        assert!(matches!(r, Err(Error::SlopeCondition(_))), "{r:?}");
    }

    #[test]
    fn sum_and_direct_sum() {
        let a = PiecewiseAffineConvex::new(vec![
            AffineFn::new(vec![1.0], 0.0),
            AffineFn::new(vec![-1.0], 0.0),
        ])
        .unwrap();
        let b = linear_from_vector(&[2.0]);
        assert_eq!(a.sum(&b).eval(&[-0.5]), 0.5 - 1.0);
        let d = a.direct_sum(&b);
        assert_eq!(d.eval(&[-0.5, 3.0]), 0.5 + 6.0);
    }
}
