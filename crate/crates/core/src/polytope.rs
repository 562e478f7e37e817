//! Polytopes given by half spaces, their vertex/facet structure, and the
//! flat interior and boundary measures that make up a toric system.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance for on-hyperplane tests, measured in Euclidean
/// distance to the hyperplane.
pub const DEFAULT_TOL: f64 = 1e-9;

const MIN_DET: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-8;
const MAX_DENOMINATOR: i64 = 1_000_000;
// Convergents with denominator <= 1e6 approximate a generic irrational to ~1e-12.
const RATIONAL_TOL: f64 = 1e-13;

/// `normal · x + offset >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.normal, x) + self.offset
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.normal)
    }

    /// Signed Euclidean distance to the bounding hyperplane, positive inside.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.eval(x) / self.norm()
    }

    fn normalized(&self) -> HalfSpace {
        let s = self.norm();
        HalfSpace {
            normal: self.normal.iter().map(|a| a / s).collect(),
            offset: self.offset / s,
        }
    }
}

/// A nondegenerate simplex embedded in R^n, together with its own
/// (possibly lower dimensional) measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub volume: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Self {
        let volume = linalg::simplex_volume(&vertices);
        Self { vertices, volume }
    }

    /// Intrinsic dimension (number of vertices minus one).
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn point(&self, barycentric: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim()];
        for (w, v) in barycentric.iter().zip(&self.vertices) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += w * vi;
            }
        }
        x
    }

    pub fn centroid(&self) -> Vec<f64> {
        linalg::centroid(&self.vertices)
    }

    /// Splits the longest edge at its midpoint.
    pub fn bisect(&self) -> (Simplex, Simplex) {
        let k = self.vertices.len();
        let (mut bi, mut bj, mut best) = (0, 1, -1.0);
        for i in 0..k {
            for j in i + 1..k {
                let d = linalg::norm(&linalg::sub(&self.vertices[i], &self.vertices[j]));
                if d > best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        let mid: Vec<f64> = self.vertices[bi]
            .iter()
            .zip(&self.vertices[bj])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut a = self.vertices.clone();
        a[bj] = mid.clone();
        let mut b = self.vertices.clone();
        b[bi] = mid;
        let half = 0.5 * self.volume;
        (
            Simplex {
                vertices: a,
                volume: half,
            },
            Simplex {
                vertices: b,
                volume: half,
            },
        )
    }
}

/// A compact polytope with nonempty interior, stored in both H- and
/// V-representation. Only facet-defining half spaces are kept; facet `k`
/// lies on `halfspaces()[k]`.
#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    source: Vec<usize>,
    vertices: Vec<Vec<f64>>,
    facet_vertices: Vec<Vec<usize>>,
    vertex_facets: Vec<Vec<usize>>,
    simplices: Vec<Vec<usize>>,
    facet_simplices: Vec<Vec<Vec<usize>>>,
    volume: f64,
    facet_areas: Vec<f64>,
}

impl Polytope {
    /// Intersects the given half spaces. Vertices are found by solving every
    /// `n`-subset of bounding hyperplanes and keeping the feasible solutions;
    /// half spaces that do not support an `(n-1)`-dimensional face are dropped.
    pub fn from_halfspaces(halfspaces: &[HalfSpace], tol: f64) -> Result<Self> {
        let first = halfspaces
            .first()
            .ok_or_else(|| Error::InvalidInput("no half spaces given".into()))?;
        let n = first.dim();
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for h in halfspaces {
            if h.dim() != n {
                return Err(Error::InvalidInput(format!(
                    "half space of dimension {} in a {n}-dimensional system",
                    h.dim()
                )));
            }
            if !h.offset.is_finite() || h.normal.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput("non-finite half space".into()));
            }
            if h.norm() == 0.0 {
                return Err(Error::InvalidInput("half space with zero normal".into()));
            }
        }
        let unit: Vec<HalfSpace> = halfspaces.iter().map(HalfSpace::normalized).collect();

        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for combo in (0..unit.len()).combinations(n) {
            let rows: Vec<&[f64]> = combo.iter().map(|&i| unit[i].normal.as_slice()).collect();
            let rhs: Vec<f64> = combo.iter().map(|&i| -unit[i].offset).collect();
            let Some(x) = linalg::solve_square(&rows, &rhs, MIN_DET) else {
                continue;
            };
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if unit.iter().any(|h| h.eval(&x) < -tol * scale) {
                continue;
            }
            if vertices
                .iter()
                .any(|v| linalg::max_abs_diff(v, &x) <= DEDUP_TOL * scale)
            {
                continue;
            }
            vertices.push(x);
        }
        if vertices.is_empty() {
            return Err(Error::EmptyOrUnbounded("no feasible vertex".into()));
        }
        let vrefs: Vec<&[f64]> = vertices.iter().map(|v| v.as_slice()).collect();
        if linalg::affine_rank(&vrefs, 1e-9) < n {
            return Err(Error::EmptyOrUnbounded(
                "vertex set is not full dimensional".into(),
            ));
        }

        let mut kept: Vec<usize> = Vec::new();
        let mut facet_vertices: Vec<Vec<usize>> = Vec::new();
        for (i, h) in unit.iter().enumerate() {
            let tight: Vec<usize> = vertices
                .iter()
                .enumerate()
                .filter(|(_, v)| {
                    let scale = 1.0 + v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                    h.eval(v).abs() <= tol * scale
                })
                .map(|(k, _)| k)
                .collect();
            if tight.len() < n {
                continue;
            }
            let trefs: Vec<&[f64]> = tight.iter().map(|&k| vertices[k].as_slice()).collect();
            if linalg::affine_rank(&trefs, 1e-9) != n - 1 {
                continue;
            }
            if facet_vertices.contains(&tight) {
                continue;
            }
            kept.push(i);
            facet_vertices.push(tight);
        }

        let mut vertex_facets = vec![Vec::new(); vertices.len()];
        for (f, vs) in facet_vertices.iter().enumerate() {
            for &v in vs {
                vertex_facets[v].push(f);
            }
        }
        if let Some(v) = vertex_facets.iter().position(|fs| fs.len() < n) {
            // Impossible for a bounded region.
            return Err(Error::EmptyOrUnbounded(format!(
                "vertex {:?} lies on fewer than {n} facets",
                vertices[v]
            )));
        }

        let mut poly = Polytope {
            dim: n,
            halfspaces: kept.iter().map(|&i| halfspaces[i].clone()).collect(),
            source: kept,
            vertices,
            facet_vertices,
            vertex_facets,
            simplices: Vec::new(),
            facet_simplices: Vec::new(),
            volume: 0.0,
            facet_areas: Vec::new(),
        };
        poly.build_triangulation();

        // Divergence theorem: the outward area vectors of a closed surface sum to 0.
        let mut closure = vec![0.0; n];
        let mut total_area = 0.0;
        for (k, area) in poly.facet_areas.iter().enumerate() {
            let u = &unit[poly.source[k]].normal;
            for (c, ui) in closure.iter_mut().zip(u) {
                *c += area * ui;
            }
            total_area += area;
        }
        if linalg::norm(&closure) > 1e-8 * total_area.max(1e-300) {
            return Err(Error::EmptyOrUnbounded(
                "facets do not close up; the region is unbounded".into(),
            ));
        }
        if poly.volume <= 0.0 {
            return Err(Error::EmptyOrUnbounded("zero volume".into()));
        }
        Ok(poly)
    }

    fn build_triangulation(&mut self) {
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let mut simplices = Vec::new();
        self.pulling(&all, self.dim, &mut simplices);
        let mut facet_simplices = Vec::with_capacity(self.facet_vertices.len());
        for fv in &self.facet_vertices {
            let mut out = Vec::new();
            self.pulling(fv, self.dim - 1, &mut out);
            facet_simplices.push(out);
        }
        self.volume = simplices
            .iter()
            .map(|s| linalg::simplex_volume(&self.points(s)))
            .sum();
        self.facet_areas = facet_simplices
            .iter()
            .map(|ss| {
                ss.iter()
                    .map(|s| linalg::simplex_volume(&self.points(s)))
                    .sum()
            })
            .collect();
        self.simplices = simplices;
        self.facet_simplices = facet_simplices;
    }

    fn points(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|&i| self.vertices[i].clone()).collect()
    }

    /// Pulling triangulation of a face: cone from its smallest vertex over the
    /// triangulated subfaces that avoid that vertex.
    fn pulling(&self, face: &[usize], d: usize, out: &mut Vec<Vec<usize>>) {
        if d == 0 {
            out.push(vec![face[0]]);
            return;
        }
        let apex = face[0];
        let face_set: BTreeSet<usize> = face.iter().copied().collect();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        for fv in &self.facet_vertices {
            let sub: Vec<usize> = fv
                .iter()
                .copied()
                .filter(|v| face_set.contains(v))
                .collect();
            if sub.len() < d || sub.len() == face.len() || sub.contains(&apex) {
                continue;
            }
            if seen.contains(&sub) {
                continue;
            }
            let refs: Vec<&[f64]> = sub.iter().map(|&k| self.vertices[k].as_slice()).collect();
            if linalg::affine_rank(&refs, 1e-9) != d - 1 {
                continue;
            }
            let mut inner = Vec::new();
            self.pulling(&sub, d - 1, &mut inner);
            for s in inner {
                let mut simplex = Vec::with_capacity(d + 1);
                simplex.push(apex);
                simplex.extend(s);
                out.push(simplex);
            }
            seen.push(sub);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    /// Index into the input list of each kept half space.
    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn num_facets(&self) -> usize {
        self.facet_vertices.len()
    }

    pub fn facet_vertices(&self, facet: usize) -> &[usize] {
        &self.facet_vertices[facet]
    }

    pub fn vertex_facets(&self, vertex: usize) -> &[usize] {
        &self.vertex_facets[vertex]
    }

    /// True iff every vertex lies on exactly `n` facets.
    pub fn is_simple(&self) -> bool {
        self.vertex_facets.iter().all(|fs| fs.len() == self.dim)
    }

    /// Euclidean volume.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Euclidean `(n-1)`-measure of a facet.
    pub fn facet_area(&self, facet: usize) -> f64 {
        self.facet_areas[facet]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.distance(x) >= -tol)
    }

    /// Smallest distance to a bounding hyperplane (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn vertex_centroid(&self) -> Vec<f64> {
        linalg::centroid(&self.vertices)
    }

    /// Triangulation of the polytope into `n`-simplices.
    pub fn triangulate(&self) -> Vec<Simplex> {
        self.simplices
            .iter()
            .map(|s| Simplex::new(self.points(s)))
            .collect()
    }

    /// Triangulation of one facet into `(n-1)`-simplices, induced by the same
    /// pulling order as the interior triangulation.
    pub fn triangulate_facet(&self, facet: usize) -> Vec<Simplex> {
        self.facet_simplices[facet]
            .iter()
            .map(|s| Simplex::new(self.points(s)))
            .collect()
    }

    pub fn product(&self, other: &Polytope) -> Result<Polytope> {
        let (n1, n2) = (self.dim, other.dim);
        let mut hs = Vec::with_capacity(self.halfspaces.len() + other.halfspaces.len());
        for h in &self.halfspaces {
            let mut normal = h.normal.clone();
            normal.extend(std::iter::repeat_n(0.0, n2));
            hs.push(HalfSpace::new(normal, h.offset));
        }
        for h in &other.halfspaces {
            let mut normal = vec![0.0; n1];
            normal.extend(h.normal.iter().copied());
            hs.push(HalfSpace::new(normal, h.offset));
        }
        Polytope::from_halfspaces(&hs, DEFAULT_TOL)
    }

    /// Image under `x -> A x + b` for an invertible `A` (given by rows).
    pub fn affine_image(&self, a: &[Vec<f64>], b: &[f64]) -> Result<Polytope> {
        let ait = linalg::inverse_transpose(a)
            .ok_or_else(|| Error::InvalidInput("singular affine map".into()))?;
        let hs: Vec<HalfSpace> = self
            .halfspaces
            .iter()
            .map(|h| {
                let normal = linalg::mat_vec(&ait, &h.normal);
                let offset = h.offset - linalg::dot(&normal, b);
                HalfSpace::new(normal, offset)
            })
            .collect();
        Polytope::from_halfspaces(&hs, DEFAULT_TOL)
    }
}

/// Convenience constructor for the box `[lo, hi]^n`.
pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Polytope> {
    let mut hs = Vec::with_capacity(2 * n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        hs.push(HalfSpace::new(e.clone(), -lo));
        e[k] = -1.0;
        hs.push(HalfSpace::new(e, hi));
    }
    Polytope::from_halfspaces(&hs, DEFAULT_TOL)
}

/// Best rational approximation with bounded denominator (continued fractions).
fn rationalize(x: f64, max_den: i64) -> (i64, i64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 || (x - p1 as f64 / q1 as f64).abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    (p1, q1)
}

/// Primitive integer vector parallel to `normal`, found by continued-fraction
/// rounding with denominators up to 10^6.
pub fn primitive_normal(normal: &[f64]) -> Result<Vec<i64>> {
    let scale = normal.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if scale == 0.0 {
        return Err(Error::IrrationalNormal(normal.to_vec()));
    }
    let fracs: Vec<(i64, i64)> = normal
        .iter()
        .map(|a| rationalize(a / scale, MAX_DENOMINATOR))
        .collect();
    for ((p, q), a) in fracs.iter().zip(normal) {
        if (*p as f64 / *q as f64 - a / scale).abs() > RATIONAL_TOL {
            return Err(Error::IrrationalNormal(normal.to_vec()));
        }
    }
    let mut l: i128 = 1;
    for &(_, q) in &fracs {
        l = l.lcm(&(q as i128));
        if l > 1_000_000_000_000 {
            return Err(Error::IrrationalNormal(normal.to_vec()));
        }
    }
    let ints: Vec<i128> = fracs
        .iter()
        .map(|&(p, q)| p as i128 * (l / q as i128))
        .collect();
    let g = ints.iter().fold(0i128, |g, v| g.gcd(v));
    Ok(ints.iter().map(|v| (v / g) as i64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    Lattice,
    Explicit,
}

/// A polytope with flat interior measure `interior_density * dx` and flat
/// boundary measure given per facet relative to Euclidean surface measure.
#[derive(Debug, Clone)]
pub struct ToricSystem {
    polytope: Polytope,
    interior_density: f64,
    facet_densities: Vec<f64>,
    kind: MeasureKind,
}

impl ToricSystem {
    pub fn new(
        polytope: Polytope,
        interior_density: f64,
        facet_densities: Vec<f64>,
    ) -> Result<Self> {
        if !(interior_density > 0.0 && interior_density.is_finite()) {
            return Err(Error::InvalidInput(
                "interior density must be positive".into(),
            ));
        }
        if facet_densities.len() != polytope.num_facets() {
            return Err(Error::InvalidInput(format!(
                "{} facet densities for {} facets",
                facet_densities.len(),
                polytope.num_facets()
            )));
        }
        if facet_densities
            .iter()
            .any(|d| !(*d >= 0.0 && d.is_finite()))
        {
            return Err(Error::InvalidInput(
                "facet densities must be nonnegative".into(),
            ));
        }
        if facet_densities.iter().all(|d| *d == 0.0) {
            return Err(Error::InvalidInput("all facet densities vanish".into()));
        }
        Ok(Self {
            polytope,
            interior_density,
            facet_densities,
            kind: MeasureKind::Explicit,
        })
    }

    /// The lattice-normalized system: unit interior density, and on a facet
    /// with primitive normal `a` the density `1/|a|`.
    pub fn lattice(polytope: Polytope) -> Result<Self> {
        let densities = polytope
            .halfspaces()
            .iter()
            .map(|h| {
                let a = primitive_normal(&h.normal)?;
                let norm = a.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                Ok(1.0 / norm)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut sys = Self::new(polytope, 1.0, densities)?;
        sys.kind = MeasureKind::Lattice;
        Ok(sys)
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn interior_density(&self) -> f64 {
        self.interior_density
    }

    pub fn facet_densities(&self) -> &[f64] {
        &self.facet_densities
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    /// Boundary measure of one facet.
    pub fn facet_measure(&self, facet: usize) -> f64 {
        self.facet_densities[facet] * self.polytope.facet_area(facet)
    }

    /// `(∫_P dμ, ∫_∂P dσ)`.
    pub fn total_measures(&self) -> (f64, f64) {
        (self.volume(), self.boundary_measure())
    }

    pub fn volume(&self) -> f64 {
        self.interior_density * self.polytope.volume()
    }

    pub fn boundary_measure(&self) -> f64 {
        (0..self.polytope.num_facets())
            .map(|k| self.facet_measure(k))
            .sum()
    }

    /// Composite system: product polytope, product interior measure and
    /// boundary measure `dσ1 × dμ2 + dμ1 × dσ2`.
    pub fn product(&self, other: &ToricSystem) -> Result<ToricSystem> {
        let polytope = self.polytope.product(&other.polytope)?;
        let m1 = self.polytope.num_facets();
        // Facets of the product keep the order of the concatenated half spaces.
        let densities = polytope
            .source_indices()
            .iter()
            .map(|&s| {
                if s < m1 {
                    self.facet_densities[s] * other.interior_density
                } else {
                    self.interior_density * other.facet_densities[s - m1]
                }
            })
            .collect();
        let mut sys = ToricSystem::new(
            polytope,
            self.interior_density * other.interior_density,
            densities,
        )?;
        if self.kind == MeasureKind::Lattice && other.kind == MeasureKind::Lattice {
            sys.kind = MeasureKind::Lattice;
        }
        Ok(sys)
    }

    /// Push-forward of the system along `x -> A x + b`.
    pub fn affine_image(&self, a: &[Vec<f64>], b: &[f64]) -> Result<ToricSystem> {
        let det = linalg::determinant(a).abs();
        let ait = linalg::inverse_transpose(a)
            .ok_or_else(|| Error::InvalidInput("singular affine map".into()))?;
        let polytope = self.polytope.affine_image(a, b)?;
        let densities = polytope
            .source_indices()
            .iter()
            .map(|&s| {
                let old = &self.polytope.halfspaces()[s].normal;
                let new = linalg::mat_vec(&ait, old);
                // Surface measure scales by det(A) |A^{-T} a| / |a|.
                self.facet_densities[s] * linalg::norm(old) / (det * linalg::norm(&new))
            })
            .collect();
        let mut sys = ToricSystem::new(polytope, self.interior_density / det, densities)?;
        sys.kind = self.kind;
        Ok(sys)
    }
}

/// Measure section of a system spec file: either `"lattice"` or explicit
/// densities listed per input half space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Keyword(MeasureKeyword),
    Explicit {
        facet_densities: Vec<f64>,
        interior_density: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKeyword {
    Lattice,
}

/// JSON system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace>,
    pub measure: MeasureSpec,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn build(&self) -> Result<ToricSystem> {
        if self.halfspaces.iter().any(|h| h.dim() != self.dim) {
            return Err(Error::InvalidInput(format!(
                "half space dimension does not match dim = {}",
                self.dim
            )));
        }
        let polytope = Polytope::from_halfspaces(&self.halfspaces, DEFAULT_TOL)?;
        match &self.measure {
            MeasureSpec::Keyword(MeasureKeyword::Lattice) => ToricSystem::lattice(polytope),
            MeasureSpec::Explicit {
                facet_densities,
                interior_density,
            } => {
                if facet_densities.len() != self.halfspaces.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} facet densities for {} half spaces",
                        facet_densities.len(),
                        self.halfspaces.len()
                    )));
                }
                let kept = polytope
                    .source_indices()
                    .iter()
                    .map(|&s| facet_densities[s])
                    .collect();
                ToricSystem::new(polytope, *interior_density, kept)
            }
        }
    }

    /// Normalized spec of a built system: irredundant half spaces only.
    pub fn from_system(sys: &ToricSystem) -> Self {
        let halfspaces = sys.polytope().halfspaces().to_vec();
        let measure = match sys.kind() {
            MeasureKind::Lattice => MeasureSpec::Keyword(MeasureKeyword::Lattice),
            MeasureKind::Explicit => MeasureSpec::Explicit {
                facet_densities: sys.facet_densities().to_vec(),
                interior_density: sys.interior_density(),
            },
        };
        Self {
            dim: sys.dim(),
            halfspaces,
            measure,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(normal: &[f64], offset: f64) -> HalfSpace {
        HalfSpace::new(normal.to_vec(), offset)
    }

    pub(crate) fn blowup() -> Polytope {
        Polytope::from_halfspaces(
            &[
                hs(&[0.0, 1.0], 1.0),
                hs(&[-1.0, -1.0], 1.0),
                hs(&[1.0, 0.0], 1.0),
                hs(&[1.0, 1.0], 1.0),
            ],
            DEFAULT_TOL,
        )
        .unwrap()
    }

    fn has_vertex(p: &Polytope, v: &[f64]) -> bool {
        p.vertices()
            .iter()
            .any(|w| linalg::max_abs_diff(w, v) < 1e-12)
    }

    #[test]
    fn blowup_quadrilateral_vertices() {
        let p = blowup();
        assert_eq!(p.vertices().len(), 4);
        for v in [[0.0, -1.0], [2.0, -1.0], [-1.0, 2.0], [-1.0, 0.0]] {
            assert!(has_vertex(&p, &v), "missing {v:?}");
        }
        assert_eq!(p.num_facets(), 4);
        assert!(p.is_simple());
        assert!((p.volume() - 4.0).abs() < 1e-12);
        let tri = p.triangulate();
        assert_eq!(tri.len(), 2);
        assert!((tri.iter().map(|s| s.volume).sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn segment_and_square() {
        let seg =
            Polytope::from_halfspaces(&[hs(&[1.0], 0.0), hs(&[-1.0], 1.0)], DEFAULT_TOL).unwrap();
        assert_eq!(seg.vertices().len(), 2);
        assert_eq!(seg.num_facets(), 2);
        assert_eq!(seg.triangulate().len(), 1);
        let sq = cube(2, 0.0, 1.0).unwrap();
        assert_eq!(sq.vertices().len(), 4);
        assert_eq!(sq.num_facets(), 4);
        let tri = sq.triangulate();
        assert_eq!(tri.len(), 2);
        assert!((tri.iter().map(|s| s.volume).sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn redundant_halfspace_dropped() {
        let p = Polytope::from_halfspaces(
            &[
                hs(&[1.0, 0.0], 0.0),
                hs(&[0.0, 1.0], 0.0),
                hs(&[-1.0, 0.0], 1.0),
                hs(&[0.0, -1.0], 1.0),
                hs(&[-1.0, -1.0], 5.0),
                hs(&[-1.0, -1.0], 2.0),
            ],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(p.num_facets(), 4);
        assert_eq!(p.source_indices(), &[0, 1, 2, 3]);
        // x + y <= 2 touches only the vertex (1, 1).
    }

    #[test]
    fn square_pyramid_is_not_simple() {
        let p = Polytope::from_halfspaces(
            &[
                hs(&[0.0, 0.0, 1.0], 0.0),
                hs(&[-1.0, 0.0, -1.0], 1.0),
                hs(&[1.0, 0.0, -1.0], 1.0),
                hs(&[0.0, -1.0, -1.0], 1.0),
                hs(&[0.0, 1.0, -1.0], 1.0),
            ],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(p.vertices().len(), 5);
        assert!(!p.is_simple());
        let apex = p
            .vertices()
            .iter()
            .position(|v| (v[2] - 1.0).abs() < 1e-12)
            .unwrap();
        assert_eq!(p.vertex_facets(apex).len(), 4);
        assert!((p.volume() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_unbounded_rejected() {
        let empty = Polytope::from_halfspaces(
            &[
                hs(&[1.0, 0.0], -2.0),
                hs(&[-1.0, 0.0], 1.0),
                hs(&[0.0, 1.0], 0.0),
                hs(&[0.0, -1.0], 1.0),
            ],
            DEFAULT_TOL,
        );
        assert!(matches!(empty, Err(Error::EmptyOrUnbounded(_))));
        let flat = Polytope::from_halfspaces(
            &[
                hs(&[1.0, 0.0], 0.0),
                hs(&[-1.0, 0.0], 0.0),
                hs(&[0.0, 1.0], 0.0),
                hs(&[0.0, -1.0], 1.0),
            ],
            DEFAULT_TOL,
        );
        assert!(matches!(flat, Err(Error::EmptyOrUnbounded(_))));
        let strip = Polytope::from_halfspaces(
            &[
                hs(&[1.0, 0.0], 0.0),
                hs(&[0.0, 1.0], 0.0),
                hs(&[-1.0, 1.0], 1.0),
                hs(&[1.0, -1.0], 1.0),
            ],
            DEFAULT_TOL,
        );
        assert!(
            matches!(strip, Err(Error::EmptyOrUnbounded(_))),
            "{strip:?}"
        );
        let zero = Polytope::from_halfspaces(&[hs(&[0.0, 0.0], 1.0)], DEFAULT_TOL);
        assert!(matches!(zero, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn primitive_normals() {
        assert_eq!(primitive_normal(&[2.0, 2.0]).unwrap(), vec![1, 1]);
        assert_eq!(primitive_normal(&[0.5, -1.5]).unwrap(), vec![1, -3]);
        assert_eq!(primitive_normal(&[0.0, -3.0]).unwrap(), vec![0, -1]);
        assert!(primitive_normal(&[1.0, std::f64::consts::PI]).is_err());
    }

    #[test]
    fn lattice_measures() {
        let sys = ToricSystem::lattice(blowup()).unwrap();
        let (vol, bdry) = sys.total_measures();
        assert!((vol - 4.0).abs() < 1e-12);
        assert!((bdry - 8.0).abs() < 1e-12);
        // The facet on x + y = 1 has Euclidean length 3√2 and lattice length 3.
        let k = sys
            .polytope()
            .halfspaces()
            .iter()
            .position(|h| h.normal == vec![-1.0, -1.0])
            .unwrap();
        assert!((sys.facet_measure(k) - 3.0).abs() < 1e-12);

        let sq = ToricSystem::lattice(cube(2, 0.0, 1.0).unwrap()).unwrap();
        let (v, b) = sq.total_measures();
        assert!((v - 1.0).abs() < 1e-14 && (b - 4.0).abs() < 1e-14);
        let seg = ToricSystem::lattice(cube(1, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(seg.facet_densities(), &[1.0, 1.0]);
        let (v, b) = seg.total_measures();
        assert!((v - 2.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn product_measures() {
        let seg = ToricSystem::lattice(cube(1, -1.0, 1.0).unwrap()).unwrap();
        let sq = seg.product(&seg).unwrap();
        let (v, b) = sq.total_measures();
        assert!((v - 4.0).abs() < 1e-12 && (b - 8.0).abs() < 1e-12);
        assert_eq!(sq.kind(), MeasureKind::Lattice);

        let bl = ToricSystem::lattice(blowup()).unwrap();
        let prism = bl.product(&seg).unwrap();
        let (v, b) = prism.total_measures();
        assert!((v - 8.0).abs() < 1e-11 && (b - 24.0).abs() < 1e-11);
        assert_eq!(prism.polytope().vertices().len(), 8);
    }

    #[test]
    fn unimodular_image_preserves_measures() {
        let bl = ToricSystem::lattice(blowup()).unwrap();
        let a = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        let img = bl.affine_image(&a, &[0.5, -2.0]).unwrap();
        let (v, b) = img.total_measures();
        assert!((v - 4.0).abs() < 1e-10 && (b - 8.0).abs() < 1e-10);
        let relattice = ToricSystem::lattice(img.polytope().clone()).unwrap();
        for (x, y) in relattice
            .facet_densities()
            .iter()
            .zip(img.facet_densities())
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"dim":2,"halfspaces":[{"normal":[0,1],"offset":1},{"normal":[-1,-1],"offset":1},
            {"normal":[1,0],"offset":1},{"normal":[1,1],"offset":1},{"normal":[1,1],"offset":3}],
            "measure":"lattice"}"#;
        let spec = SystemSpec::from_json(text).unwrap();
        let sys = spec.build().unwrap();
        let again = SystemSpec::from_system(&sys);
        assert_eq!(again.halfspaces.len(), 4);
        let sys2 = SystemSpec::from_json(&again.to_json())
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(sys.total_measures(), sys2.total_measures());

        let explicit = r#"{"dim":1,"halfspaces":[{"normal":[1],"offset":0},{"normal":[-1],"offset":1}],
            "measure":{"facet_densities":[0.5,1.0],"interior_density":2.0}}"#;
        let sys = SystemSpec::from_json(explicit).unwrap().build().unwrap();
        let (v, b) = sys.total_measures();
        assert!((v - 2.0).abs() < 1e-14 && (b - 1.5).abs() < 1e-14);
    }
}
