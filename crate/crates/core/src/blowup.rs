//! The one-point blow-up of the projective plane with its anticanonical
//! polytope, and closed forms along the diagonal direction `η = (1, 1)`.

use std::f64::consts::PI;

use crate::polytope::{HalfSpace, MeasureKeyword, MeasureSpec, SystemSpec, ToricSystem};

/// `|x|` at or below this uses the Taylor series of the closed forms.
pub const SERIES_CUTOFF: f64 = 1e-3;
const SERIES_TERMS: usize = 24;

pub const ETA: [f64; 2] = [1.0, 1.0];

pub fn spec() -> SystemSpec {
    SystemSpec {
        dim: 2,
        halfspaces: vec![
            HalfSpace::new(vec![0.0, 1.0], 1.0),
            HalfSpace::new(vec![-1.0, -1.0], 1.0),
            HalfSpace::new(vec![1.0, 0.0], 1.0),
            HalfSpace::new(vec![1.0, 1.0], 1.0),
        ],
        measure: MeasureSpec::Keyword(MeasureKeyword::Lattice),
    }
}

pub fn system() -> ToricSystem {
    spec().build().expect("the blow-up polytope is valid")
}

fn inv_factorial(k: usize) -> f64 {
    1.0 / (1..=k).map(|i| i as f64).product::<f64>()
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `∫_P e^{x⟨η⟩} dμ = ((1 - x) e^{-x} + (3x - 1) e^x) / x²`.
pub fn volume_integral(x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        return volume_series(x);
    }
    ((1.0 - x) * (-x).exp() + (3.0 * x - 1.0) * x.exp()) / (x * x)
}

fn volume_series(x: f64) -> f64 {
    (2..SERIES_TERMS)
        .map(|k| {
            let kf = k as f64;
            (sign(k) * (1.0 + kf) + 3.0 * kf - 1.0) * inv_factorial(k) * x.powi(k as i32 - 2)
        })
        .sum()
}

/// `∫_∂P e^{x⟨η⟩} dσ = -((2 - x) e^{-x} - (3x + 2) e^x) / x`.
pub fn boundary_integral(x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        return boundary_series(x);
    }
    -((2.0 - x) * (-x).exp() - (3.0 * x + 2.0) * x.exp()) / x
}

fn boundary_series(x: f64) -> f64 {
    -(1..SERIES_TERMS)
        .map(|k| {
            let kf = k as f64;
            (sign(k) * (2.0 + kf) - (3.0 * kf + 2.0)) * inv_factorial(k) * x.powi(k as i32 - 1)
        })
        .sum::<f64>()
}

/// `∫_P x⟨η⟩ e^{x⟨η⟩} dμ = ((x² - 2) e^{-x} + (3x² - 4x + 2) e^x) / x²`.
pub fn weighted_integral(x: f64) -> f64 {
    if x.abs() <= SERIES_CUTOFF {
        return weighted_series(x);
    }
    ((x * x - 2.0) * (-x).exp() + (3.0 * x * x - 4.0 * x + 2.0) * x.exp()) / (x * x)
}

fn weighted_series(x: f64) -> f64 {
    (2..SERIES_TERMS)
        .map(|k| {
            let kf = k as f64;
            let c = sign(k) * (kf * (kf - 1.0) - 2.0) + 3.0 * kf * (kf - 1.0) - 4.0 * kf + 2.0;
            c * inv_factorial(k) * x.powi(k as i32 - 2)
        })
        .sum()
}

/// `μ̌_NA(x⟨η⟩) = -2π ∫_∂ e^{x⟨η⟩} / ∫ e^{x⟨η⟩}`.
pub fn na_mu_closed(x: f64) -> f64 {
    -2.0 * PI * boundary_integral(x) / volume_integral(x)
}

/// `σ(x⟨η⟩) = n + ∫ x⟨η⟩e^{x⟨η⟩} / ∫ e^{x⟨η⟩} - log ∫ e^{x⟨η⟩}`.
pub fn sigma_closed(x: f64) -> f64 {
    let z = volume_integral(x);
    2.0 + weighted_integral(x) / z - z.ln()
}

/// `μ̌^λ(x⟨η⟩)` from the closed forms.
pub fn na_mu_lambda_closed(lambda: f64, x: f64) -> f64 {
    na_mu_closed(x) + lambda * sigma_closed(x)
}
