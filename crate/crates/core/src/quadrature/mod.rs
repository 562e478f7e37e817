//! Integration over polytopes, facets and simplices: adaptive Gauss rules for
//! general integrands and exact divided-difference formulas for `e^ℓ`.

pub mod cells;
pub mod divdiff;
pub mod rules;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{Simplex, ToricSystem};
pub use divdiff::exp_divided_difference;
use rules::SimplexRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    Numeric,
    ExactAffineExponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss points per collapsed coordinate.
    pub order: usize,
    pub max_subdiv: usize,
    pub rel_tol: f64,
    pub mode: QuadratureMode,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 8,
            max_subdiv: 12,
            rel_tol: 1e-10,
            mode: QuadratureMode::ExactAffineExponent,
        }
    }
}

impl QuadratureConfig {
    pub fn numeric() -> Self {
        Self {
            mode: QuadratureMode::Numeric,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidInput("quadrature order must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// An integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Non-adaptive rule on one simplex; NaN when the integrand is not finite at
/// some node.
fn apply_rule<F: Fn(&[f64]) -> f64>(s: &Simplex, f: &F, order: usize) -> f64 {
    let rule = SimplexRule::get(s.dim(), order);
    let scale = s.volume * factorial(s.dim());
    let mut sum = 0.0;
    for (lam, w) in rule.barycentric.iter().zip(&rule.weights) {
        let v = f(&s.point(lam));
        if !v.is_finite() {
            return f64::NAN;
        }
        sum += w * v;
    }
    scale * sum
}

fn adapt<F: Fn(&[f64]) -> f64>(
    s: &Simplex,
    whole: f64,
    tol: f64,
    depth: usize,
    f: &F,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if s.dim() == 0 {
        return if whole.is_finite() {
            Ok(Estimate {
                value: whole,
                error: 0.0,
            })
        } else {
            Err(Error::NonFinite(depth))
        };
    }
    if depth >= cfg.max_subdiv {
        return if whole.is_finite() {
            Ok(Estimate {
                value: whole,
                error: f64::NAN,
            })
        } else {
            Err(Error::NonFinite(depth))
        };
    }
    let (a, b) = s.bisect();
    let ia = apply_rule(&a, f, cfg.order);
    let ib = apply_rule(&b, f, cfg.order);
    let diff = (ia + ib - whole).abs();
    if ia.is_finite() && ib.is_finite() && diff <= tol {
        return Ok(Estimate {
            value: ia + ib,
            error: diff,
        });
    }
    let ea = adapt(&a, ia, 0.5 * tol, depth + 1, f, cfg)?;
    let eb = adapt(&b, ib, 0.5 * tol, depth + 1, f, cfg)?;
    Ok(Estimate {
        value: ea.value + eb.value,
        error: ea.error + eb.error,
    })
}

/// Adaptive integral of `f` against Lebesgue measure over a union of
/// simplices of common dimension. Subdivision stops once the bisection
/// defect is below `rel_tol` times the L¹ size of the first pass.
pub fn integrate_simplices<F: Fn(&[f64]) -> f64>(
    simplices: &[Simplex],
    f: &F,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    let first: Vec<f64> = simplices
        .iter()
        .map(|s| apply_rule(s, f, cfg.order))
        .collect();
    let mass: f64 = first
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| v.abs())
        .sum();
    let total_vol: f64 = simplices.iter().map(|s| s.volume).sum();
    let budget = cfg.rel_tol * mass;
    let mut out = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for (s, &whole) in simplices.iter().zip(&first) {
        let share = if total_vol > 0.0 {
            s.volume / total_vol
        } else {
            1.0
        };
        let e = adapt(s, whole, budget * share, 0, f, cfg)?;
        out.value += e.value;
        out.error += e.error;
    }
    Ok(out)
}

pub fn integrate_simplex<F: Fn(&[f64]) -> f64>(
    s: &Simplex,
    f: &F,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    integrate_simplices(std::slice::from_ref(s), f, cfg)
}

/// `∫_P f dμ`.
pub fn integrate_volume<F: Fn(&[f64]) -> f64>(
    sys: &ToricSystem,
    f: &F,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let e = integrate_simplices(&sys.polytope().triangulate(), f, cfg)?;
    let d = sys.interior_density();
    Ok(Estimate {
        value: d * e.value,
        error: d * e.error,
    })
}

/// `∫_∂P f dσ`.
pub fn integrate_boundary<F: Fn(&[f64]) -> f64>(
    sys: &ToricSystem,
    f: &F,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let mut out = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for k in 0..sys.polytope().num_facets() {
        let d = sys.facet_densities()[k];
        if d == 0.0 {
            continue;
        }
        let e = integrate_simplices(&sys.polytope().triangulate_facet(k), f, cfg)?;
        out.value += d * e.value;
        out.error += d * e.error;
    }
    Ok(out)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact `∫_S e^ℓ` for `ℓ(x) = gradient·x + constant`:
/// `d! · vol(S) · exp[ℓ(v_0), …, ℓ(v_d)]`.
pub fn exact_exp_affine_simplex(s: &Simplex, gradient: &[f64], constant: f64) -> f64 {
    let z: Vec<f64> = s
        .vertices
        .iter()
        .map(|v| crate::linalg::dot(gradient, v) + constant)
        .collect();
    factorial(s.dim()) * s.volume * exp_divided_difference(&z)
}

/// Barycentric moments of `e^ℓ` on a simplex, where `ℓ` takes the values `z`
/// at the vertices: `m0 = ∫ e^ℓ`, `m1[i] = ∫ λ_i e^ℓ` and, when requested,
/// `m2[i][j] = ∫ λ_i λ_j e^ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMoments {
    pub m0: f64,
    pub m1: Vec<f64>,
    pub m2: Option<Vec<Vec<f64>>>,
}

pub fn exp_affine_moments(s: &Simplex, z: &[f64], second: bool) -> ExpMoments {
    // ∂/∂z_i of exp[z] duplicates node i; integrals of λ^α follow.
    let scale = factorial(s.dim()) * s.volume;
    let k = z.len();
    let m0 = scale * exp_divided_difference(z);
    let mut buf = Vec::with_capacity(k + 2);
    let m1 = (0..k)
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(z);
            buf.push(z[i]);
            scale * exp_divided_difference(&buf)
        })
        .collect();
    let m2 = second.then(|| {
        let mut m = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                buf.clear();
                buf.extend_from_slice(z);
                buf.push(z[i]);
                buf.push(z[j]);
                let mult = if i == j { 2.0 } else { 1.0 };
                let v = mult * scale * exp_divided_difference(&buf);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    });
    ExpMoments { m0, m1, m2 }
}
