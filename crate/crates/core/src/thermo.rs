//! Canonical families over temperature, equilibria at fixed internal energy,
//! composite systems and the heat-bath limit.
//!
//! Composite quantities are obtained factor by factor: the canonical state of
//! a product system is the product of the factors' canonical states, so
//! `U`, `S` and `F` of the composite are sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::convexfn::{l1_distance, normalize, trivial_state, State};
use crate::error::{Error, Result};
use crate::functionals::{report, state_report, FunctionalReport};
use crate::optimizer::{
    canonical_distribution, warm_minimize, CanonicalSolver, OptResult, SolverConfig,
};
use crate::polytope::ToricSystem;
use crate::quadrature::QuadratureConfig;

/// Stands in for `T = ∞`.
pub const T_MAX: f64 = 1e6;
const BISECTION_STEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct FamilyPoint {
    pub t: f64,
    pub result: OptResult,
}

impl FamilyPoint {
    pub fn u(&self) -> f64 {
        self.result.report.internal_energy
    }

    pub fn s(&self) -> f64 {
        self.result.report.entropy
    }

    pub fn f(&self) -> f64 {
        self.result.report.free_energy
    }
}

/// Largest violations of the expected shape of a canonical family; each is
/// compared with `2 f_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyChecks {
    /// Largest drop of `U_can` between consecutive temperatures.
    pub u_drop: f64,
    pub s_drop: f64,
    /// Largest drop of `F_can`.
    pub f_drop: f64,
    /// Largest positive second divided difference of `F_can`, scaled by the
    /// squared mean spacing.
    pub f_convexity: f64,
    pub slack: f64,
}

impl FamilyChecks {
    pub fn passed(&self) -> bool {
        self.u_drop <= self.slack
            && self.s_drop <= self.slack
            && self.f_drop <= self.slack
            && self.f_convexity <= self.slack
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalFamily {
    pub points: Vec<FamilyPoint>,
    pub checks: FamilyChecks,
}

impl CanonicalFamily {
    pub const CSV_HEADER: &'static str = "T,U,S,F";

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| format!("{:.16e},{:.16e},{:.16e},{:.16e}", p.t, p.u(), p.s(), p.f()))
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("temperature grid is empty".into()));
    }
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "temperature grid must be increasing, finite and nonnegative".into(),
        ));
    }
    Ok(())
}

pub fn family_checks(points: &[FamilyPoint], f_tol: f64) -> FamilyChecks {
    let drop = |f: &dyn Fn(&FamilyPoint) -> f64| {
        points
            .windows(2)
            .map(|w| f(&w[0]) - f(&w[1]))
            .fold(0.0, f64::max)
    };
    let f_convexity = points
        .windows(3)
        .map(|w| {
            let (h0, h1) = (w[1].t - w[0].t, w[2].t - w[1].t);
            let second =
                2.0 * ((w[2].f() - w[1].f()) / h1 - (w[1].f() - w[0].f()) / h0) / (h0 + h1);
            second * (0.5 * (h0 + h1)).powi(2)
        })
        .fold(0.0, f64::max);
    FamilyChecks {
        u_drop: drop(&|p| p.u()),
        s_drop: drop(&|p| p.s()),
        f_drop: drop(&|p| p.f()),
        f_convexity,
        slack: 2.0 * f_tol,
    }
}

/// Canonical distributions over an increasing temperature grid. The first
/// point is solved from scratch; the others are solved in parallel, each
/// from scratch and warm-started from the first, keeping the lower `F`.
pub fn canonical_family(
    sys: &ToricSystem,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<CanonicalFamily> {
    check_grid(grid)?;
    let first = canonical_distribution(sys, grid[0], cfg)?;
    let rest: Vec<FamilyPoint> = grid[1..]
        .par_iter()
        .map(|&t| {
            let cold = canonical_distribution(sys, t, cfg)?;
            let warm = warm_minimize(sys, t, &first.q_star, cfg)?;
            let result = if warm.report.free_energy < cold.report.free_energy - cfg.f_tol {
                warm
            } else {
                cold
            };
            Ok(FamilyPoint { t, result })
        })
        .collect::<Result<_>>()?;
    let mut points = vec![FamilyPoint {
        t: grid[0],
        result: first,
    }];
    points.extend(rest);
    let checks = family_checks(&points, cfg.f_tol);
    Ok(CanonicalFamily { points, checks })
}

/// `U(1_P) = ∫_∂P dσ / ∫_P dμ`, the largest canonical energy.
pub fn trivial_energy(sys: &ToricSystem) -> f64 {
    let (v, b) = sys.total_measures();
    b / v
}

fn canonical_energy(solver: &mut CanonicalSolver, t: f64) -> Result<f64> {
    if t >= T_MAX {
        return Ok(trivial_energy(solver.system()));
    }
    Ok(solver.solve(t)?.report.internal_energy)
}

/// Smallest `T` in `[lo, hi]` with `g(T) ≥ 0` for nondecreasing `g`, by
/// bisection; `g(hi) ≥ 0` is assumed.
fn bisect<G: FnMut(f64) -> Result<f64>>(mut g: G, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-13 * (1.0 + hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// First temperature in `{0} ∪ {2^k}` up to [`T_MAX`] where `g ≥ 0`, with
/// the previous one as a lower bracket.
fn bracket<G: FnMut(f64) -> Result<f64>>(g: &mut G) -> Result<Option<(f64, f64)>> {
    if g(0.0)? >= 0.0 {
        return Ok(Some((0.0, 0.0)));
    }
    let mut lo = 0.0;
    let mut t = 1.0 / 64.0;
    while t < T_MAX {
        if g(t)? >= 0.0 {
            return Ok(Some((lo, t)));
        }
        lo = t;
        t *= 2.0;
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub u_target: f64,
    /// `[T⁻, T⁺]`; [`T_MAX`] marks an infinite end.
    pub t_interval: [f64; 2],
    pub singleton: bool,
    pub u_eq: State,
    pub report: FunctionalReport,
}

/// The equilibrium state at internal energy `u_target` and the interval of
/// temperatures whose canonical states realize it, by bisection on the
/// nondecreasing map `T ↦ U_can(T)`.
pub fn equilibrium_of_energy(
    sys: &ToricSystem,
    u_target: f64,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult> {
    let mut solver = CanonicalSolver::new(sys, cfg.clone());
    equilibrium_with(&mut solver, u_target)
}

pub fn equilibrium_with(solver: &mut CanonicalSolver, u_target: f64) -> Result<EquilibriumResult> {
    let sys = solver.system().clone();
    let cfg = solver.config().clone();
    let tol = energy_tol(&cfg);
    let u_min = canonical_energy(solver, 0.0)?;
    let u_max = trivial_energy(&sys);
    if !(u_target >= u_min - tol && u_target <= u_max + tol) {
        return Err(Error::OutOfRange {
            value: u_target,
            min: u_min,
            max: u_max,
        });
    }
    let lower = {
        let mut g = |t: f64| Ok(canonical_energy(solver, t)? - (u_target - tol));
        match bracket(&mut g)? {
            Some((lo, hi)) if hi > lo => bisect(&mut g, lo, hi)?,
            Some((_, hi)) => hi,
            None => T_MAX,
        }
    };
    let upper = {
        let mut g = |t: f64| Ok(canonical_energy(solver, t)? - (u_target + tol));
        match bracket(&mut g)? {
            Some((lo, hi)) if hi > lo => bisect(&mut g, lo, hi)?,
            Some((_, hi)) => hi,
            None => T_MAX,
        }
    };
    let upper = upper.max(lower);
    let (u_eq, report) = if (u_target - u_max).abs() <= tol {
        let u = trivial_state(&sys);
        let r = state_report(&sys, upper, &u, &cfg.quadrature)?;
        (u, r)
    } else {
        let t = lower.min(T_MAX);
        let r = solver.solve(t)?;
        (r.u_star, r.report)
    };
    let singleton = is_singleton(solver, lower, upper, tol)?;
    Ok(EquilibriumResult {
        u_target,
        t_interval: [lower, upper],
        singleton,
        u_eq,
        report,
    })
}

/// Whether `[lower, upper]` is no wider than the band `|U - u| ≤ tol` cut
/// out by the slope of `U_can` measured on a wider window.
fn is_singleton(solver: &mut CanonicalSolver, lower: f64, upper: f64, tol: f64) -> Result<bool> {
    let width = upper - lower;
    if width <= 1e-9 * (1.0 + upper) {
        return Ok(true);
    }
    if upper >= T_MAX {
        return Ok(false);
    }
    let reach = width.max(0.01 * (1.0 + upper));
    let a = (lower - reach).max(0.0);
    let b = (upper + reach).min(T_MAX);
    let slope = (canonical_energy(solver, b)? - canonical_energy(solver, a)?) / (b - a);
    Ok(slope > 0.0 && width <= 4.0 * tol / slope)
}

/// Tolerance on internal energies reached by bisection.
pub fn energy_tol(cfg: &SolverConfig) -> f64 {
    10.0 * cfg.f_tol
}

#[derive(Debug, Clone)]
pub struct IsothermalVerdict {
    pub isothermal: bool,
    pub interval1: [f64; 2],
    pub interval2: [f64; 2],
    /// `|F_{12}(T, u_1 × u_2) - F_1(T, u_1) - F_2(T, u_2)|` at a common
    /// temperature, when isothermal.
    pub product_residual: Option<f64>,
}

/// Whether `(S1, U1)` and `(S2, U2)` share an equilibrium temperature.
pub fn isothermal_check(
    s1: &ToricSystem,
    u1: f64,
    s2: &ToricSystem,
    u2: f64,
    cfg: &SolverConfig,
) -> Result<IsothermalVerdict> {
    let e1 = equilibrium_of_energy(s1, u1, cfg)?;
    let e2 = equilibrium_of_energy(s2, u2, cfg)?;
    let [a1, b1] = e1.t_interval;
    let [a2, b2] = e2.t_interval;
    let tol = 1e-6 * (1.0 + a1.max(a2));
    let lo = a1.max(a2);
    let isothermal = lo <= b1.min(b2) + tol;
    let product_residual = if isothermal {
        let t = lo.min(T_MAX);
        let prod = s1.product(s2)?;
        let f1 = state_report(s1, t, &e1.u_eq, &cfg.quadrature)?.free_energy;
        let f2 = state_report(s2, t, &e2.u_eq, &cfg.quadrature)?.free_energy;
        let f12 = product_state_report(s1, &e1.u_eq, s2, &e2.u_eq, &prod, t, &cfg.quadrature)?
            .free_energy;
        Some((f12 - f1 - f2).abs())
    } else {
        None
    };
    Ok(IsothermalVerdict {
        isothermal,
        interval1: e1.t_interval,
        interval2: e2.t_interval,
        product_residual,
    })
}

/// Report of the product state `u_1 × u_2` on `prod = S1 × S2`.
fn product_state_report(
    s1: &ToricSystem,
    u1: &State,
    s2: &ToricSystem,
    u2: &State,
    prod: &ToricSystem,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<FunctionalReport> {
    let (Some(q1), Some(q2)) = (u1.q(), u2.q()) else {
        return Err(Error::InvalidInput(
            "product of mixtures is not supported".into(),
        ));
    };
    debug_assert_eq!(prod.dim(), s1.dim() + s2.dim());
    report(prod, t, &q1.direct_sum(q2), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductCheck {
    pub f1: f64,
    pub f2: f64,
    pub f12: f64,
    /// `|F_{12} - F_1 - F_2|`.
    pub additivity_residual: f64,
    /// `∫|u_{12} - u_1 × u_2| dμ / ∫dμ` on the product.
    pub l1_residual: f64,
}

/// Solves the canonical problem on both factors and on the product.
pub fn product_canonical_check(
    s1: &ToricSystem,
    s2: &ToricSystem,
    t: f64,
    cfg: &SolverConfig,
) -> Result<ProductCheck> {
    let prod = s1.product(s2)?;
    let r1 = canonical_distribution(s1, t, cfg)?;
    let r2 = canonical_distribution(s2, t, cfg)?;
    let r12 = canonical_distribution(&prod, t, cfg)?;
    let product_q = r1.q_star.direct_sum(&r2.q_star);
    let product_u = normalize(&prod, &product_q, &cfg.quadrature)?;
    let (f1, f2, f12) = (
        r1.report.free_energy,
        r2.report.free_energy,
        r12.report.free_energy,
    );
    let l1 =
        l1_distance(&prod, &r12.u_star, &product_u, &QuadratureConfig::numeric())? / prod.volume();
    Ok(ProductCheck {
        f1,
        f2,
        f12,
        additivity_residual: (f12 - f1 - f2).abs(),
        l1_residual: l1,
    })
}

/// `T (S_can(T + dT) - S_can(T - dT)) / (2 dT)`.
pub fn heat_capacity(sys: &ToricSystem, t: f64, dt: f64, cfg: &SolverConfig) -> Result<f64> {
    let mut solver = CanonicalSolver::new(sys, cfg.clone());
    heat_capacity_with(&mut solver, t, dt)
}

pub fn heat_capacity_with(solver: &mut CanonicalSolver, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && t - dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < dT < T, got T = {t}, dT = {dt}"
        )));
    }
    let hi = solver.solve(t + dt)?.report.entropy;
    let lo = solver.solve(t - dt)?.report.entropy;
    Ok(t * (hi - lo) / (2.0 * dt))
}

/// Temperature of the composite `S1 × S2` at total energy `u_total`, from
/// `U_can,12 = U_can,1 + U_can,2`.
pub fn composite_temperature(
    s1: &mut CanonicalSolver,
    s2: &mut CanonicalSolver,
    u_total: f64,
) -> Result<f64> {
    let mut g = |t: f64| Ok(canonical_energy(s1, t)? + canonical_energy(s2, t)? - u_total);
    match bracket(&mut g)? {
        Some((lo, hi)) if hi > lo => bisect(&mut g, lo, hi),
        Some((_, hi)) => Ok(hi),
        None => Ok(T_MAX),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatBathRow {
    pub n: usize,
    pub t_n: f64,
    pub delta_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatBathTable {
    pub t_r: f64,
    pub rows: Vec<HeatBathRow>,
    /// `-(F(T_R, u_can) - F(T_R, u_probe)) / T_R`.
    pub limit: f64,
    pub heat_capacity: f64,
}

impl HeatBathTable {
    pub const CSV_HEADER: &'static str = "N,T_N,dS_N";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{:.16e},{:.16e}", r.n, r.t_n, r.delta_s))
            .collect()
    }
}

/// Couples `S` at energy `U` to `N` copies of the reservoir `S_R` prepared
/// at `T_R` and tracks the equilibrium temperature `T_N` and entropy gain.
///
/// `T_N` solves `U_S(T) + N U_R(T) = U + N U_R(T_R)` with per-factor
/// canonical energies.
#[allow(clippy::too_many_arguments)]
pub fn heat_bath_experiment(
    s: &ToricSystem,
    s_r: &ToricSystem,
    u: f64,
    t_r: f64,
    n_list: &[usize],
    u_probe: &State,
    cfg: &SolverConfig,
) -> Result<HeatBathTable> {
    if !(t_r > 0.0 && t_r < T_MAX) {
        return Err(Error::InvalidInput(format!(
            "reservoir temperature {t_r} must be positive"
        )));
    }
    let mut sol = CanonicalSolver::new(s, cfg.clone());
    let mut res = CanonicalSolver::new(s_r, cfg.clone());
    let heat_capacity = {
        let dt = 0.05 * t_r;
        let hi = res.solve(t_r + dt)?.report.internal_energy;
        let lo = res.solve(t_r - dt)?.report.internal_energy;
        (hi - lo) / (2.0 * dt)
    };
    if !(heat_capacity > 0.0) {
        return Err(Error::NegativeHeatCapacity(heat_capacity));
    }
    let probe = state_report(s, t_r, u_probe, &cfg.quadrature)?;
    let r_at = res.solve(t_r)?.report;
    let s_at = sol.solve(t_r)?.report;
    let limit = -(s_at.free_energy - probe.free_energy) / t_r;
    let tol = energy_tol(cfg);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let nf = n as f64;
        let target = u + nf * r_at.internal_energy;
        let t_n = if (u - s_at.internal_energy).abs() <= tol {
            t_r
        } else {
            let mut g = |t: f64| -> Result<f64> {
                Ok(canonical_energy(&mut sol, t)? + nf * canonical_energy(&mut res, t)? - target)
            };
            let (lo, hi) = if u < s_at.internal_energy {
                (0.0, t_r)
            } else {
                let mut hi = 2.0 * t_r;
                while g(hi)? < 0.0 && hi < T_MAX {
                    hi *= 2.0;
                }
                (t_r, hi.min(T_MAX))
            };
            if g(lo)? >= 0.0 {
                lo
            } else {
                bisect(&mut g, lo, hi)?
            }
        };
        let s_n = sol.solve(t_n)?.report.entropy;
        let r_n = res.solve(t_n)?.report.entropy;
        let delta_s = s_n + nf * r_n - probe.entropy - nf * r_at.entropy;
        rows.push(HeatBathRow { n, t_n, delta_s });
    }
    Ok(HeatBathTable {
        t_r,
        rows,
        limit,
        heat_capacity,
    })
}
