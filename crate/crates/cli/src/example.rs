//! The blow-up of the projective plane at a point, worked through along the
//! diagonal direction `η = (1, 1)`.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use muentropy::blowup;
use muentropy::convexfn::linear_from_vector;
use muentropy::functionals::{futaki, report};
use muentropy::optimizer::{optimize_vector, SolverConfig};
use muentropy::quadrature::QuadratureConfig;

use crate::output::{fmt, row, Run};
use crate::CliError;

pub const CURVE_HEADER: &str =
    "x,na_mu_quadrature,na_mu_closed,sigma_quadrature,sigma_closed,max_rel_discrepancy";
pub const LAMBDA_HEADER: &str = "x,lambda,lambda_over_2pi";
pub const TABLE_HEADER: &str = "lambda_over_2pi,lambda,x_lambda,residual";
pub const TABLE_LEVELS: [f64; 4] = [0.0, -0.25, -0.5, -1.0];

fn grid() -> impl Iterator<Item = f64> {
    (-300..=300).map(|k| k as f64 / 100.0)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn curve_rows(cfg: &QuadratureConfig) -> Result<Vec<String>, CliError> {
    let sys = blowup::system();
    grid()
        .map(|x| {
            let r = report(&sys, 0.0, &linear_from_vector(&[x, x]), cfg)?;
            let (mu, sigma) = (blowup::na_mu_closed(x), blowup::sigma_closed(x));
            let d = rel(r.na_mu, mu).max(rel(r.sigma, sigma));
            Ok(row(&[x, r.na_mu, mu, r.sigma, sigma, d]))
        })
        .collect()
}

/// `λ` with `Fut^λ_{xη}(⟨η⟩) = 0`; the invariant is affine in `λ`.
pub fn lambda_rows(cfg: &QuadratureConfig) -> Result<Vec<String>, CliError> {
    let sys = blowup::system();
    let eta = linear_from_vector(&[1.0, 1.0]);
    let mut rows = Vec::new();
    for x in grid() {
        let f0 = futaki(&sys, 0.0, &[x, x], &eta, cfg)?;
        let f1 = futaki(&sys, 1.0, &[x, x], &eta, cfg)?;
        let slope = f1 - f0;
        if slope.abs() <= 1e-12 * f0.abs().max(1.0) {
            continue;
        }
        let lambda = -f0 / slope;
        rows.push(row(&[x, lambda, lambda / (2.0 * PI)]));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub lambda_over_2pi: f64,
    pub lambda: f64,
    pub x: f64,
    pub residual: f64,
}

pub fn table(cfg: &SolverConfig) -> Result<Vec<TableRow>, CliError> {
    let sys = blowup::system();
    TABLE_LEVELS
        .iter()
        .map(|&l| {
            let lambda = 2.0 * PI * l;
            let v = optimize_vector(&sys, lambda, &[0.0, 0.0], cfg)?;
            Ok(TableRow {
                lambda_over_2pi: l,
                lambda,
                x: v.xi[0],
                residual: v.residual,
            })
        })
        .collect()
}

pub fn run(out: &Path, command: String) -> Result<(), CliError> {
    let cfg = SolverConfig::default();
    let run = Run::new(command)
        .with_spec(&blowup::spec())
        .with_config(&cfg);
    run.write_csv(
        &out.join("curve.csv"),
        CURVE_HEADER,
        &curve_rows(&cfg.quadrature)?,
    )?;
    run.write_csv(
        &out.join("lambda_curve.csv"),
        LAMBDA_HEADER,
        &lambda_rows(&cfg.quadrature)?,
    )?;
    let rows: Vec<String> = table(&cfg)?
        .iter()
        .map(|r| {
            [
                fmt(r.lambda_over_2pi),
                fmt(r.lambda),
                fmt(r.x),
                fmt(r.residual),
            ]
            .join(",")
        })
        .collect();
    run.write_csv(&out.join("x_lambda.csv"), TABLE_HEADER, &rows)?;
    for r in &rows {
        println!("{r}");
    }
    Ok(())
}
