//! Decomposition of a polytope into the linearity cells of one or more
//! piecewise affine functions, and exact integrals of `e^ℓ` against affine
//! weights on that decomposition.

use crate::convexfn::AffineFn;
use crate::error::Result;
use crate::linalg;
use crate::polytope::{HalfSpace, Polytope, Simplex, ToricSystem, DEFAULT_TOL};

use super::{
    exp_affine_moments, integrate_simplices, Estimate, ExpMoments, QuadratureConfig, QuadratureMode,
};

/// A cell on which every input function is affine. `active[f]` is the index
/// of the active piece of function `f`.
#[derive(Debug, Clone)]
pub struct Cell {
    pub active: Vec<usize>,
    pub simplices: Vec<Simplex>,
    /// Boundary simplices on `∂P` with their facet densities.
    pub boundary: Vec<(f64, Simplex)>,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    pub cells: Vec<Cell>,
    pub interior_density: f64,
}

/// Half space with the facet of `P` it came from, if any.
#[derive(Clone)]
struct Tagged {
    hs: HalfSpace,
    facet: Option<usize>,
}

const GRAD_EPS: f64 = 1e-12;

impl CellComplex {
    /// Common refinement of the linearity cells of all `functions`, each
    /// given by its affine pieces. Cells of measure zero are dropped; ties
    /// between identical pieces go to the lower index.
    pub fn new(sys: &ToricSystem, functions: &[&[AffineFn]]) -> Result<Self> {
        let p = sys.polytope();
        let base: Vec<Tagged> = p
            .halfspaces()
            .iter()
            .enumerate()
            .map(|(k, h)| Tagged {
                hs: h.clone(),
                facet: Some(k),
            })
            .collect();
        let mut regions: Vec<(Vec<usize>, Vec<Tagged>)> = vec![(Vec::new(), base)];
        for pieces in functions {
            let mut next = Vec::new();
            for (active, hs) in &regions {
                for i in 0..pieces.len() {
                    let Some(extra) = dominance(pieces, i) else {
                        continue;
                    };
                    let mut all = hs.clone();
                    all.extend(extra.into_iter().map(|hs| Tagged { hs, facet: None }));
                    let mut a = active.clone();
                    a.push(i);
                    next.push((a, all));
                }
            }
            regions = next;
        }
        let mut cells = Vec::with_capacity(regions.len());
        for (active, tagged) in regions {
            let hs: Vec<HalfSpace> = tagged.iter().map(|t| t.hs.clone()).collect();
            let Ok(poly) = Polytope::from_halfspaces(&hs, DEFAULT_TOL) else {
                continue;
            };
            cells.push(build_cell(sys, active, &poly, &tagged));
        }
        Ok(Self {
            cells,
            interior_density: sys.interior_density(),
        })
    }

    pub fn volume(&self) -> f64 {
        self.interior_density
            * self
                .cells
                .iter()
                .flat_map(|c| &c.simplices)
                .map(|s| s.volume)
                .sum::<f64>()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| &c.boundary)
            .map(|(d, s)| d * s.volume)
            .sum()
    }

    /// `∫_P f dμ` where `f` may depend on the cell (to select active pieces).
    pub fn integrate_volume<F: Fn(&Cell, &[f64]) -> f64>(
        &self,
        f: &F,
        cfg: &QuadratureConfig,
    ) -> Result<Estimate> {
        let mut out = Estimate {
            value: 0.0,
            error: 0.0,
        };
        for c in &self.cells {
            let e = integrate_simplices(&c.simplices, &|x: &[f64]| f(c, x), cfg)?;
            out.value += self.interior_density * e.value;
            out.error += self.interior_density * e.error;
        }
        Ok(out)
    }

    pub fn integrate_boundary<F: Fn(&Cell, &[f64]) -> f64>(
        &self,
        f: &F,
        cfg: &QuadratureConfig,
    ) -> Result<Estimate> {
        let mut out = Estimate {
            value: 0.0,
            error: 0.0,
        };
        for c in &self.cells {
            for (d, s) in &c.boundary {
                let e = integrate_simplices(std::slice::from_ref(s), &|x: &[f64]| f(c, x), cfg)?;
                out.value += d * e.value;
                out.error += d * e.error;
            }
        }
        Ok(out)
    }

    /// Largest value of a function over all cell vertices.
    pub fn max_over_vertices<F: Fn(&Cell, &[f64]) -> f64>(&self, f: F) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.vertices.iter().map(move |v| (c, v)))
            .map(|(c, v)| f(c, v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_over_vertices<F: Fn(&Cell, &[f64]) -> f64>(&self, f: F) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.vertices.iter().map(move |v| (c, v)))
            .map(|(c, v)| f(c, v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Integrals of `a·b·e^{ℓ - shift}` over `P` (against `dμ`) and `∂P`
    /// (against `dσ`), where on each cell the exponent `ℓ` and the optional
    /// affine factors `a`, `b` are chosen by `select`. Missing factors are 1.
    pub fn exp_affine<'a, S>(
        &'a self,
        shift: f64,
        mode: QuadratureMode,
        cfg: &QuadratureConfig,
        select: S,
    ) -> (f64, f64)
    where
        S: Fn(&'a Cell) -> (&'a AffineFn, Option<&'a AffineFn>, Option<&'a AffineFn>),
    {
        let mut vol = 0.0;
        let mut bdry = 0.0;
        for c in &self.cells {
            let (l, a, b) = select(c);
            for s in &c.simplices {
                vol += self.interior_density * simplex_term(s, shift, l, a, b, mode, cfg);
            }
            for (d, s) in &c.boundary {
                bdry += d * simplex_term(s, shift, l, a, b, mode, cfg);
            }
        }
        (vol, bdry)
    }
}

/// Extra half spaces `ℓ_i - ℓ_j >= 0` cutting out the cell of piece `i`;
/// `None` when the cell is empty.
fn dominance(pieces: &[AffineFn], i: usize) -> Option<Vec<HalfSpace>> {
    let li = &pieces[i];
    let mut out = Vec::new();
    for (j, lj) in pieces.iter().enumerate() {
        if j == i {
            continue;
        }
        let normal = linalg::sub(&li.gradient, &lj.gradient);
        let offset = li.constant - lj.constant;
        let scale = 1.0 + linalg::norm(&li.gradient).max(linalg::norm(&lj.gradient));
        if linalg::norm(&normal) <= GRAD_EPS * scale {
            if offset < 0.0 || (offset == 0.0 && j < i) {
                return None;
            }
            continue;
        }
        out.push(HalfSpace::new(normal, offset));
    }
    Some(out)
}

fn build_cell(sys: &ToricSystem, active: Vec<usize>, poly: &Polytope, tagged: &[Tagged]) -> Cell {
    let simplices = poly.triangulate();
    let mut boundary = Vec::new();
    for (k, &src) in poly.source_indices().iter().enumerate() {
        if let Some(facet) = tagged[src].facet {
            let d = sys.facet_densities()[facet];
            if d > 0.0 {
                boundary.extend(poly.triangulate_facet(k).into_iter().map(|s| (d, s)));
            }
        }
    }
    Cell {
        active,
        simplices,
        boundary,
        vertices: poly.vertices().to_vec(),
    }
}

fn simplex_term(
    s: &Simplex,
    shift: f64,
    l: &AffineFn,
    a: Option<&AffineFn>,
    b: Option<&AffineFn>,
    mode: QuadratureMode,
    cfg: &QuadratureConfig,
) -> f64 {
    let z: Vec<f64> = s.vertices.iter().map(|v| l.eval(v) - shift).collect();
    let av: Option<Vec<f64>> = a.map(|f| s.vertices.iter().map(|v| f.eval(v)).collect());
    let bv: Option<Vec<f64>> = b.map(|f| s.vertices.iter().map(|v| f.eval(v)).collect());
    let m = match mode {
        QuadratureMode::ExactAffineExponent => exp_affine_moments(s, &z, b.is_some()),
        QuadratureMode::Numeric => numeric_moments(s, &z, b.is_some(), cfg),
    };
    match (av, bv) {
        (None, None) => m.m0,
        (Some(a), None) | (None, Some(a)) => dot(&a, &m.m1),
        (Some(a), Some(b)) => {
            let m2 = m.m2.as_ref().expect("second moments requested");
            let mut sum = 0.0;
            for (i, ai) in a.iter().enumerate() {
                for (j, bj) in b.iter().enumerate() {
                    sum += ai * bj * m2[i][j];
                }
            }
            sum
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    linalg::dot(a, b)
}

/// Same moments as [`exp_affine_moments`], by adaptive Gauss quadrature on
/// the reference simplex.
pub fn numeric_moments(s: &Simplex, z: &[f64], second: bool, cfg: &QuadratureConfig) -> ExpMoments {
    let d = s.dim();
    let k = z.len();
    let scale = super::factorial(d) * s.volume;
    let mut verts = vec![vec![0.0; d.max(1)]];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        verts.push(e);
    }
    if d == 0 {
        let v = z[0].exp();
        return ExpMoments {
            m0: v,
            m1: vec![v],
            m2: second.then(|| vec![vec![v]]),
        };
    }
    let reference = Simplex::new(verts);
    let bary = |t: &[f64]| -> Vec<f64> {
        let mut lam = Vec::with_capacity(k);
        lam.push(1.0 - t.iter().sum::<f64>());
        lam.extend_from_slice(t);
        lam
    };
    let expo = |lam: &[f64]| dot(lam, z).exp();
    let int = |g: &dyn Fn(&[f64]) -> f64| -> f64 {
        // Reference simplex volume is 1/d!, so rescale to the physical one.
        let e = integrate_simplices(
            std::slice::from_ref(&reference),
            &|t: &[f64]| g(&bary(t)),
            cfg,
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
        scale * e
    };
    let m0 = int(&|lam| expo(lam));
    let m1 = (0..k)
        .map(|i| int(&|lam: &[f64]| lam[i] * expo(lam)))
        .collect();
    let m2 = second.then(|| {
        let mut m = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let v = int(&|lam: &[f64]| lam[i] * lam[j] * expo(lam));
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    });
    ExpMoments { m0, m1, m2 }
}

/// Integrals of `e^q` for `q = max_i ℓ_i`, all scaled by `e^{-shift}` with
/// `shift = max_P q`: `z = ∫_P e^q dμ`, `b = ∫_∂P e^q dσ`, `w = ∫_P q e^q dμ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpIntegrals {
    pub shift: f64,
    pub z: f64,
    pub b: f64,
    pub w: f64,
    pub grad: Option<ExpGradients>,
}

/// Derivatives of the scaled `z, b, w` with respect to the piece parameters,
/// laid out as `[g_0 (n entries), c_0, g_1, c_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpGradients {
    pub z: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

impl ExpIntegrals {
    pub fn log_z(&self) -> f64 {
        self.shift + self.z.ln()
    }
}

pub fn pa_exp_integrals(
    sys: &ToricSystem,
    pieces: &[AffineFn],
    cfg: &QuadratureConfig,
    with_grad: bool,
) -> Result<ExpIntegrals> {
    let cx = CellComplex::new(sys, &[pieces])?;
    Ok(exp_integrals_on(&cx, sys, pieces, cfg, with_grad))
}

pub fn exp_integrals_on(
    cx: &CellComplex,
    sys: &ToricSystem,
    pieces: &[AffineFn],
    cfg: &QuadratureConfig,
    with_grad: bool,
) -> ExpIntegrals {
    let n = sys.dim();
    let shift = sys
        .polytope()
        .vertices()
        .iter()
        .map(|v| {
            pieces
                .iter()
                .map(|l| l.eval(v))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let np = (n + 1) * pieces.len();
    let mut z = 0.0;
    let mut b = 0.0;
    let mut w = 0.0;
    let (mut gz, mut gb, mut gw) = if with_grad {
        (vec![0.0; np], vec![0.0; np], vec![0.0; np])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let moments = |s: &Simplex, zs: &[f64]| match cfg.mode {
        QuadratureMode::ExactAffineExponent => exp_affine_moments(s, zs, with_grad),
        QuadratureMode::Numeric => numeric_moments(s, zs, with_grad, cfg),
    };
    for c in &cx.cells {
        let i = c.active[0];
        let l = &pieces[i];
        let off = i * (n + 1);
        let interior = c.simplices.iter().map(|s| (cx.interior_density, s, true));
        let bdry = c.boundary.iter().map(|(d, s)| (*d, s, false));
        for (rho, s, is_interior) in interior.chain(bdry) {
            let zs: Vec<f64> = s.vertices.iter().map(|v| l.eval(v) - shift).collect();
            let m = moments(s, &zs);
            let m0 = rho * m.m0;
            if is_interior {
                z += m0;
                w += rho * dot(&zs, &m.m1);
            } else {
                b += m0;
            }
            if !with_grad {
                continue;
            }
            let m2 = m.m2.as_ref().unwrap();
            for k in 0..n {
                let xk: f64 = s
                    .vertices
                    .iter()
                    .zip(&m.m1)
                    .map(|(v, mj)| v[k] * mj)
                    .sum::<f64>()
                    * rho;
                if is_interior {
                    let mut lx = 0.0;
                    for (j, zj) in zs.iter().enumerate() {
                        for (jj, v) in s.vertices.iter().enumerate() {
                            lx += zj * v[k] * m2[j][jj];
                        }
                    }
                    gz[off + k] += xk;
                    // ∂w = ∫ (1 + ℓ) x_k e^ℓ with ℓ = (ℓ - shift) + shift.
                    gw[off + k] += xk * (1.0 + shift) + rho * lx;
                } else {
                    gb[off + k] += xk;
                }
            }
            if is_interior {
                gz[off + n] += m0;
                gw[off + n] += m0 * (1.0 + shift) + rho * dot(&zs, &m.m1);
            } else {
                gb[off + n] += m0;
            }
        }
    }
    ExpIntegrals {
        shift,
        z,
        b,
        w: w + shift * z,
        grad: with_grad.then_some(ExpGradients {
            z: gz,
            b: gb,
            w: gw,
        }),
    }
}

/// Scaled `z, b, w` for a function that is affine on every cell, given by
/// `select`; the function need not be convex. `shift` is its maximum over the
/// cell vertices.
pub fn cellwise_exp_integrals<S>(
    cx: &CellComplex,
    select: S,
    cfg: &QuadratureConfig,
) -> ExpIntegrals
where
    S: Fn(&Cell) -> AffineFn,
{
    let fns: Vec<AffineFn> = cx.cells.iter().map(&select).collect();
    let shift = cx
        .cells
        .iter()
        .zip(&fns)
        .flat_map(|(c, l)| c.vertices.iter().map(move |v| l.eval(v)))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut b = 0.0;
    let mut w = 0.0;
    for (c, l) in cx.cells.iter().zip(&fns) {
        for s in &c.simplices {
            let zs: Vec<f64> = s.vertices.iter().map(|v| l.eval(v) - shift).collect();
            let m = match cfg.mode {
                QuadratureMode::ExactAffineExponent => exp_affine_moments(s, &zs, false),
                QuadratureMode::Numeric => numeric_moments(s, &zs, false, cfg),
            };
            z += cx.interior_density * m.m0;
            w += cx.interior_density * dot(&zs, &m.m1);
        }
        for (d, s) in &c.boundary {
            let zs: Vec<f64> = s.vertices.iter().map(|v| l.eval(v) - shift).collect();
            let m = match cfg.mode {
                QuadratureMode::ExactAffineExponent => exp_affine_moments(s, &zs, false),
                QuadratureMode::Numeric => numeric_moments(s, &zs, false, cfg),
            };
            b += d * m.m0;
        }
    }
    ExpIntegrals {
        shift,
        z,
        b,
        w: w + shift * z,
        grad: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{cube, HalfSpace, DEFAULT_TOL};

    fn blowup() -> ToricSystem {
        let hs = [
            HalfSpace::new(vec![0.0, 1.0], 1.0),
            HalfSpace::new(vec![-1.0, -1.0], 1.0),
            HalfSpace::new(vec![1.0, 0.0], 1.0),
            HalfSpace::new(vec![1.0, 1.0], 1.0),
        ];
        ToricSystem::lattice(Polytope::from_halfspaces(&hs, DEFAULT_TOL).unwrap()).unwrap()
    }

    fn pieces() -> Vec<AffineFn> {
        vec![
            AffineFn::new(vec![0.3, -0.2], 0.1),
            AffineFn::new(vec![-1.5, 0.4], -0.2),
            AffineFn::new(vec![1.1, 1.7], -1.0),
            AffineFn::new(vec![0.3, -0.2], -0.5), // dominated duplicate gradient
        ]
    }

    #[test]
    fn cells_partition_measures() {
        let sys = blowup();
        let p = pieces();
        let cx = CellComplex::new(&sys, &[&p]).unwrap();
        assert!((cx.volume() - 4.0).abs() < 1e-12);
        assert!((cx.boundary_measure() - 8.0).abs() < 1e-12);
        assert!(cx.cells.iter().all(|c| c.active[0] != 3));
        let r = [
            AffineFn::new(vec![0.0, 1.0], 0.0),
            AffineFn::new(vec![0.0, -1.0], 0.0),
        ];
        let both = CellComplex::new(&sys, &[&p, &r]).unwrap();
        assert!((both.volume() - 4.0).abs() < 1e-12);
        assert!(both.cells.len() > cx.cells.len());
    }

    #[test]
    fn exact_and_numeric_modes_agree() {
        let sys = blowup();
        let p = pieces();
        let exact = pa_exp_integrals(&sys, &p, &QuadratureConfig::default(), false).unwrap();
        let numeric = pa_exp_integrals(&sys, &p, &QuadratureConfig::numeric(), false).unwrap();
        for (a, b) in [
            (exact.z, numeric.z),
            (exact.b, numeric.b),
            (exact.w, numeric.w),
        ] {
            assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
        }
        // Pointwise quadrature of max-of-affines on the cells as a third opinion.
        let cx = CellComplex::new(&sys, &[&p]).unwrap();
        let q = |x: &[f64]| {
            p.iter()
                .map(|l| l.eval(x))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let cfg = QuadratureConfig::numeric();
        let z = cx
            .integrate_volume(&|_, x| (q(x) - exact.shift).exp(), &cfg)
            .unwrap()
            .value;
        let w = cx
            .integrate_volume(&|_, x| q(x) * (q(x) - exact.shift).exp(), &cfg)
            .unwrap()
            .value;
        assert!((z / exact.z - 1.0).abs() < 1e-10);
        assert!((w / exact.w - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let sys = ToricSystem::lattice(cube(2, -1.0, 1.0).unwrap()).unwrap();
        let p = pieces();
        let cfg = QuadratureConfig::default();
        let e = pa_exp_integrals(&sys, &p, &cfg, true).unwrap();
        let g = e.grad.clone().unwrap();
        let h = 1e-6;
        for param in 0..3 * p.len() {
            let (i, k) = (param / 3, param % 3);
            let bump = |sgn: f64| {
                let mut q = p.clone();
                if k < 2 {
                    q[i].gradient[k] += sgn * h;
                } else {
                    q[i].constant += sgn * h;
                }
                // Rescale to the unperturbed shift so derivatives are comparable.
                let r = pa_exp_integrals(&sys, &q, &cfg, false).unwrap();
                let f = (r.shift - e.shift).exp();
                (r.z * f, r.b * f, r.w * f)
            };
            let (zp, bp, wp) = bump(1.0);
            let (zm, bm, wm) = bump(-1.0);
            for (fd, an) in [
                ((zp - zm) / (2.0 * h), g.z[param]),
                ((bp - bm) / (2.0 * h), g.b[param]),
                ((wp - wm) / (2.0 * h), g.w[param]),
            ] {
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                    "param {param}: fd {fd} analytic {an}"
                );
            }
        }
    }
}
