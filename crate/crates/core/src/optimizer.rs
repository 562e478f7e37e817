//! Minimization of the free μ-energy `F(T, u(q))` over piecewise affine
//! convex `q`, the linear-vector critical point solver, and semistability
//! sampling.
//!
//! The objective is differentiated exactly: on each linearity cell the
//! integrands are exponentials of affine functions, so the derivatives of
//! `∫e^q`, `∫_∂ e^q` and `∫q e^q` in the piece parameters are themselves
//! exponential moments (see [`crate::quadrature::cells::ExpGradients`]).

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexfn::{linear_from_vector, normalize, AffineFn, PiecewiseAffineConvex, State};
use crate::error::{Error, Result};
use crate::functionals::{futaki, lambda_from_temperature, report, FunctionalReport};
use crate::linalg::solve_square;
use crate::polytope::ToricSystem;
use crate::quadrature::cells::pa_exp_integrals;
use crate::quadrature::QuadratureConfig;
use crate::random::{random_interior_point, random_pa, substream};

/// Piece counts visited in order, capped by [`SolverConfig::pieces`].
pub const PIECE_SCHEDULE: [usize; 4] = [1, 3, 6, 10];
/// Entropy penalty weights used to pick the most entropic ground state.
pub const TIE_BREAK_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];

const LBFGS_MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;
const SPLIT_SCALE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Largest number of affine pieces `K`.
    pub pieces: usize,
    pub starts: usize,
    pub step_tol: f64,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pieces: 10,
            starts: 4,
            step_tol: 1e-13,
            grad_tol: 1e-10,
            f_tol: 1e-8,
            max_iters: 400,
            seed: 0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pieces == 0 || self.starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidInput(
                "pieces, starts and max_iters must be positive".into(),
            ));
        }
        for (name, v) in [
            ("step_tol", self.step_tol),
            ("grad_tol", self.grad_tol),
            ("f_tol", self.f_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        self.quadrature.validate()
    }

    pub fn piece_schedule(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = PIECE_SCHEDULE
            .iter()
            .copied()
            .filter(|&k| k < self.pieces)
            .collect();
        ks.push(self.pieces);
        ks
    }
}

/// Outcome of a free energy minimization.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub q_star: PiecewiseAffineConvex,
    pub u_star: State,
    pub report: FunctionalReport,
    pub converged: bool,
    /// Largest pairwise gap in `F` between the starts.
    pub starts_agreement: f64,
    pub start_values: Vec<f64>,
    /// Best `F` reached with each piece count.
    pub piece_curve: Vec<(usize, f64)>,
    /// Accepted objective values of the final descent of the winning start.
    pub history: Vec<f64>,
}

// Parameter layout: `[g_0 (n entries), c_0, g_1, c_1, ...]`.

pub fn params_of(q: &PiecewiseAffineConvex) -> Vec<f64> {
    q.pieces()
        .iter()
        .flat_map(|l| {
            l.gradient
                .iter()
                .copied()
                .chain(std::iter::once(l.constant))
        })
        .collect()
}

pub fn function_of(params: &[f64], dim: usize) -> PiecewiseAffineConvex {
    let pieces = params
        .chunks(dim + 1)
        .map(|c| AffineFn::new(c[..dim].to_vec(), c[dim]))
        .collect();
    PiecewiseAffineConvex::new(pieces).expect("parameters describe at least one piece")
}

/// `F(T, u(q))` and its gradient in the piece parameters of `q`.
pub fn free_energy_and_gradient(
    sys: &ToricSystem,
    t: f64,
    params: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, Vec<f64>)> {
    let q = function_of(params, sys.dim());
    if !q.pieces().iter().all(AffineFn::is_finite) {
        return Err(Error::InvalidInput("non-finite parameters".into()));
    }
    let e = pa_exp_integrals(sys, q.pieces(), cfg, true)?;
    let g = e.grad.as_ref().expect("gradients requested");
    let (z, b, w) = (e.z, e.b, e.w);
    let s = -w / z + e.log_z() - sys.volume().ln();
    let f = b / z - t * s;
    let grad = (0..params.len())
        .map(|k| {
            let du = (g.b[k] * z - b * g.z[k]) / (z * z);
            let ds = -g.w[k] / z + w * g.z[k] / (z * z) + g.z[k] / z;
            du - t * ds
        })
        .collect();
    if !f.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok((f, grad))
}

/// Result of one quasi-Newton descent.
#[derive(Debug, Clone)]
pub struct Descent {
    pub x: Vec<f64>,
    pub value: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// L-BFGS with Armijo backtracking. Failed evaluations count as `+∞`.
pub fn lbfgs<F>(objective: F, x0: Vec<f64>, cfg: &SolverConfig) -> Result<Descent>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0;
    let (mut f, mut g) = objective(&x)?;
    let mut history = vec![f];
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        if inf_norm(&g) <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = two_loop(&g, &mem);
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let mut step = None;
        for attempt in 0..2 {
            let slope = dot(&d, &g);
            let mut alpha = if mem.is_empty() {
                (1.0 / inf_norm(&d)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..MAX_BACKTRACKS {
                let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                if let Ok((fn_, gn)) = objective(&xn) {
                    if fn_ <= f + ARMIJO * alpha * slope {
                        step = Some((xn, fn_, gn));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if step.is_some() || attempt == 1 || mem.is_empty() {
                break;
            }
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let Some((xn, fn_, gn)) = step else {
            // No descent at working precision: a kink or a flat minimum.
            converged = inf_norm(&g) <= cfg.grad_tol.sqrt();
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if mem.len() == LBFGS_MEMORY {
                mem.remove(0);
            }
            mem.push((s.clone(), y, 1.0 / sy));
        }
        let decrease = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        history.push(f);
        let scale = 1.0 + inf_norm(&x);
        if inf_norm(&s) <= cfg.step_tol * scale || decrease <= 1e-16 * (1.0 + f.abs()) {
            converged = true;
            break;
        }
    }
    Ok(Descent {
        x,
        value: f,
        history,
        iterations,
        converged,
    })
}

fn two_loop(g: &[f64], mem: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter().map(|v| -v).collect()
}

/// Descent on `F(T, ·)` from `init`, keeping its number of pieces.
pub fn descend(
    sys: &ToricSystem,
    t: f64,
    init: &PiecewiseAffineConvex,
    cfg: &SolverConfig,
) -> Result<Descent> {
    let quad = cfg.quadrature;
    lbfgs(
        |p| free_energy_and_gradient(sys, t, p, &quad),
        params_of(init),
        cfg,
    )
}

/// Adds pieces to `q` until it has `k`, each a tilted copy of an existing
/// piece pivoting about a random point of `P`.
fn split(
    sys: &ToricSystem,
    q: &PiecewiseAffineConvex,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> PiecewiseAffineConvex {
    let normal = Normal::new(0.0, SPLIT_SCALE).unwrap();
    let base = q.pieces().to_vec();
    let mut pieces = base.clone();
    let mut j = 0;
    while pieces.len() < k {
        let l = &base[j % base.len()];
        let x = random_interior_point(sys, 0.0, rng);
        let delta: Vec<f64> = (0..sys.dim()).map(|_| normal.sample(rng)).collect();
        let g: Vec<f64> = l.gradient.iter().zip(&delta).map(|(a, b)| a + b).collect();
        pieces.push(AffineFn::new(g, l.constant - dot(&delta, &x)));
        j += 1;
    }
    PiecewiseAffineConvex::new(pieces).expect("nonempty")
}

struct StartOutcome {
    q: PiecewiseAffineConvex,
    value: f64,
    entropy: f64,
    curve: Vec<(usize, f64)>,
    history: Vec<f64>,
    converged: bool,
}

fn run_start(sys: &ToricSystem, t: f64, index: usize, cfg: &SolverConfig) -> Result<StartOutcome> {
    let mut rng = substream(cfg.seed, index as u64);
    let n = sys.dim();
    let init = if index == 0 {
        PiecewiseAffineConvex::zero(n)
    } else {
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        linear_from_vector(&g)
    };
    let mut best: Option<(PiecewiseAffineConvex, Descent)> = None;
    let mut curve = Vec::new();
    for k in cfg.piece_schedule() {
        let start = match &best {
            None => split(sys, &init, k, &mut rng),
            Some((q, _)) => split(sys, q, k, &mut rng),
        };
        let d = descend(sys, t, &start, cfg)?;
        curve.push((k, d.value));
        let improved = best.as_ref().is_none_or(|(_, b)| d.value < b.value);
        if improved {
            let q = function_of(&d.x, n).pruned(sys)?;
            best = Some((q, d));
        }
    }
    let (q, d) = best.expect("schedule is nonempty");
    let q = q.recentred();
    let r = report(sys, t, &q, &cfg.quadrature)?;
    Ok(StartOutcome {
        q,
        value: d.value,
        entropy: r.entropy,
        curve,
        history: d.history,
        converged: d.converged,
    })
}

fn finish(
    sys: &ToricSystem,
    t: f64,
    q: PiecewiseAffineConvex,
    cfg: &SolverConfig,
) -> Result<(PiecewiseAffineConvex, State, FunctionalReport)> {
    let mut q = q;
    let mut r = report(sys, t, &q, &cfg.quadrature)?;
    // Never return something worse than the trivial state.
    let trivial = report(
        sys,
        t,
        &PiecewiseAffineConvex::zero(sys.dim()),
        &cfg.quadrature,
    )?;
    if trivial.free_energy < r.free_energy {
        q = PiecewiseAffineConvex::zero(sys.dim());
        r = trivial;
    }
    let u = normalize(sys, &q, &cfg.quadrature)?;
    Ok((q, u, r))
}

/// Multi-start minimization of `F(T, ·)` over `K`-piece convex functions.
pub fn minimize_free_energy(sys: &ToricSystem, t: f64, cfg: &SolverConfig) -> Result<OptResult> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "temperature {t} must be finite and nonnegative"
        )));
    }
    cfg.validate()?;
    let outcomes: Vec<StartOutcome> = (0..cfg.starts)
        .into_par_iter()
        .map(|i| run_start(sys, t, i, cfg))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let agreement = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    let mut winner = 0;
    for (i, o) in outcomes.iter().enumerate().skip(1) {
        let w = &outcomes[winner];
        let better = o.value < w.value - cfg.f_tol
            || ((o.value - w.value).abs() <= cfg.f_tol && o.entropy > w.entropy);
        if better {
            winner = i;
        }
    }
    let mut curve: Vec<(usize, f64)> = cfg
        .piece_schedule()
        .into_iter()
        .map(|k| (k, f64::INFINITY))
        .collect();
    for o in &outcomes {
        for (slot, (_, v)) in curve.iter_mut().zip(&o.curve) {
            slot.1 = slot.1.min(*v);
        }
    }
    let w = outcomes
        .into_iter()
        .nth(winner)
        .expect("at least one start");
    let (q, u, r) = finish(sys, t, w.q, cfg)?;
    Ok(OptResult {
        q_star: q,
        u_star: u,
        report: r,
        converged: w.converged,
        starts_agreement: agreement,
        start_values: values,
        piece_curve: curve,
        history: w.history,
    })
}

/// Single descent at `T` from a known function, for sweeps.
pub fn warm_minimize(
    sys: &ToricSystem,
    t: f64,
    init: &PiecewiseAffineConvex,
    cfg: &SolverConfig,
) -> Result<OptResult> {
    let d = descend(sys, t, init, cfg)?;
    let q = function_of(&d.x, sys.dim()).pruned(sys)?.recentred();
    let (q, u, r) = finish(sys, t, q, cfg)?;
    Ok(OptResult {
        q_star: q,
        u_star: u,
        report: r,
        converged: d.converged,
        starts_agreement: 0.0,
        start_values: vec![d.value],
        piece_curve: vec![(init.pieces().len(), d.value)],
        history: d.history,
    })
}

/// The μ-canonical distribution at temperature `T`.
///
/// At `T = 0` the minimizers of `U` may not be unique; the entropy penalty
/// `U - εS` is followed down [`TIE_BREAK_SCHEDULE`] and its end point is kept
/// when it is still a minimizer of `U` within `f_tol`.
pub fn canonical_distribution(sys: &ToricSystem, t: f64, cfg: &SolverConfig) -> Result<OptResult> {
    let base = minimize_free_energy(sys, t, cfg)?;
    if t > 0.0 {
        return Ok(base);
    }
    let mut q = base.q_star.clone();
    for eps in TIE_BREAK_SCHEDULE {
        q = warm_minimize(sys, eps, &q, cfg)?.q_star;
    }
    let r = report(sys, 0.0, &q, &cfg.quadrature)?;
    if r.internal_energy <= base.report.internal_energy + cfg.f_tol
        && r.entropy >= base.report.entropy
    {
        let u = normalize(sys, &q, &cfg.quadrature)?;
        return Ok(OptResult {
            q_star: q,
            u_star: u,
            report: r,
            ..base
        });
    }
    Ok(base)
}

/// Cache of canonical distributions on one system, warm-starting new
/// temperatures from the nearest solved one.
pub struct CanonicalSolver<'a> {
    sys: &'a ToricSystem,
    cfg: SolverConfig,
    cache: Vec<(f64, OptResult)>,
}

impl<'a> CanonicalSolver<'a> {
    pub fn new(sys: &'a ToricSystem, cfg: SolverConfig) -> Self {
        Self {
            sys,
            cfg,
            cache: Vec::new(),
        }
    }

    pub fn system(&self) -> &ToricSystem {
        self.sys
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn insert(&mut self, t: f64, r: OptResult) {
        self.cache.push((t, r));
    }

    pub fn solve(&mut self, t: f64) -> Result<OptResult> {
        if let Some((_, r)) = self.cache.iter().find(|(s, _)| *s == t) {
            return Ok(r.clone());
        }
        let nearest = self
            .cache
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, r)| r.q_star.clone());
        let r = match nearest {
            Some(q) if t > 0.0 => warm_minimize(self.sys, t, &q, &self.cfg)?,
            _ => canonical_distribution(self.sys, t, &self.cfg)?,
        };
        self.cache.push((t, r.clone()));
        Ok(r)
    }
}

/// Critical point of `ξ ↦ μ̌^λ(⟨ξ⟩)` over linear functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorResult {
    pub xi: Vec<f64>,
    /// `μ̌^λ(⟨ξ⟩)`.
    pub value: f64,
    /// `max_i |Fut^λ_ξ(⟨e_i⟩)|`.
    pub residual: f64,
    pub iterations: usize,
}

pub const VECTOR_RESIDUAL_TOL: f64 = 1e-8;
const VECTOR_TARGET: f64 = 1e-12;
const JACOBIAN_STEP: f64 = 1e-6;

fn futaki_residual(
    sys: &ToricSystem,
    lambda: f64,
    xi: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let n = sys.dim();
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            futaki(sys, lambda, xi, &linear_from_vector(&e), cfg)
        })
        .collect()
}

/// Damped Newton iteration on `Fut^λ_ξ(⟨e_i⟩) = 0` with a central finite
/// difference Jacobian.
pub fn optimize_vector(
    sys: &ToricSystem,
    lambda: f64,
    xi0: &[f64],
    cfg: &SolverConfig,
) -> Result<VectorResult> {
    let n = sys.dim();
    if xi0.len() != n {
        return Err(Error::InvalidInput(format!(
            "vector of length {} on a {n}-dimensional system",
            xi0.len()
        )));
    }
    let quad = &cfg.quadrature;
    let mut xi = xi0.to_vec();
    let mut g = futaki_residual(sys, lambda, &xi, quad)?;
    let mut iterations = 0;
    while inf_norm(&g) > VECTOR_TARGET && iterations < cfg.max_iters {
        iterations += 1;
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut a = xi.clone();
            let mut b = xi.clone();
            a[j] += JACOBIAN_STEP;
            b[j] -= JACOBIAN_STEP;
            let ga = futaki_residual(sys, lambda, &a, quad)?;
            let gb = futaki_residual(sys, lambda, &b, quad)?;
            for i in 0..n {
                jac[i][j] = (ga[i] - gb[i]) / (2.0 * JACOBIAN_STEP);
            }
        }
        let rows: Vec<&[f64]> = jac.iter().map(|r| r.as_slice()).collect();
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        // A singular Jacobian falls back to a gradient step on μ̌^λ.
        let d = solve_square(&rows, &rhs, 1e-14).unwrap_or(rhs);
        let norm = inf_norm(&g);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = xi.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            if let Ok(gt) = futaki_residual(sys, lambda, &trial, quad) {
                if inf_norm(&gt) < (1.0 - 1e-4 * alpha) * norm {
                    xi = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = inf_norm(&g);
    if !(residual <= VECTOR_RESIDUAL_TOL) {
        return Err(Error::NoConvergence(format!(
            "linear critical point residual {residual:e} after {iterations} iterations at ξ = {xi:?}"
        )));
    }
    let r = report(
        sys,
        crate::functionals::temperature_from_lambda(lambda),
        &linear_from_vector(&xi),
        quad,
    )?;
    Ok(VectorResult {
        value: r.na_mu + lambda * r.sigma,
        xi,
        residual,
        iterations,
    })
}

/// `F` at temperature `T` of the state `u(⟨ξ⟩)`, using
/// `μ̌^λ = -2π F(T) - λ (-n + log ∫dμ)`.
pub fn free_energy_from_na_mu(sys: &ToricSystem, t: f64, na_mu_lambda: f64) -> f64 {
    let lambda = lambda_from_temperature(t);
    -(na_mu_lambda + lambda * crate::functionals::system_constant(sys)) / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Destabilized {
        q: PiecewiseAffineConvex,
        futaki: f64,
    },
    NoDestabilizerFound {
        tested: usize,
        min_futaki: f64,
    },
}

pub const DESTABILIZING_TOL: f64 = 1e-8;

/// Deterministic test functions: `±x_i`, coordinate hinges
/// `max(0, ±(x_i - c))` and hinges `max(0, h - d_F(x))` along each facet `F`,
/// at a few levels across `P`.
pub fn semistability_battery(sys: &ToricSystem) -> Vec<PiecewiseAffineConvex> {
    let n = sys.dim();
    let verts = sys.polytope().vertices();
    let mut out = Vec::new();
    let levels = [0.1, 0.25, 0.5, 0.75, 0.9];
    for i in 0..n {
        let lo = verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
        let hi = verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            out.push(linear_from_vector(&e));
            for s in levels {
                let c = lo + s * (hi - lo);
                let hinge = AffineFn::new(e.clone(), -sign * c);
                out.push(
                    PiecewiseAffineConvex::new(vec![AffineFn::constant_fn(n, 0.0), hinge]).unwrap(),
                );
            }
        }
    }
    for h in sys.polytope().halfspaces() {
        let depth = verts.iter().map(|v| h.eval(v)).fold(0.0, f64::max);
        for s in levels {
            let neg: Vec<f64> = h.normal.iter().map(|a| -a).collect();
            let l = AffineFn::new(neg, s * depth - h.offset);
            out.push(PiecewiseAffineConvex::new(vec![AffineFn::constant_fn(n, 0.0), l]).unwrap());
        }
    }
    out
}

/// Searches for a convex `q` with `Fut^λ_ξ(q) < 0` among the battery and
/// `trials` random functions. Not finding one is evidence, not proof.
pub fn semistability_check(
    sys: &ToricSystem,
    lambda: f64,
    xi: &[f64],
    trials: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Verdict> {
    let mut min_futaki = f64::INFINITY;
    let battery = semistability_battery(sys);
    let tested = battery.len() + trials;
    let candidates = battery
        .into_iter()
        .chain((0..trials).map(|i| random_pa(sys.dim(), &mut substream(seed, i as u64))));
    for q in candidates {
        let f = futaki(sys, lambda, xi, &q, cfg)?;
        if f < -DESTABILIZING_TOL {
            return Ok(Verdict::Destabilized { q, futaki: f });
        }
        min_futaki = min_futaki.min(f);
    }
    Ok(Verdict::NoDestabilizerFound { tested, min_futaki })
}
