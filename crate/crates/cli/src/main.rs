mod example;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use muentropy::blowup;
use muentropy::convexfn::{linear_from_vector, PiecewiseAffineConvex};
use muentropy::estimates::{mean_value_check, poincare_probe, rellich_majorant_probe};
use muentropy::functionals::{report, temperature_from_lambda, FunctionalReport};
use muentropy::optimizer::{canonical_distribution, minimize_free_energy, SolverConfig};
use muentropy::polytope::{cube, SystemSpec, ToricSystem};
use muentropy::random::{random_interior_point, random_nonneg_pa, substream};
use muentropy::thermo::{
    canonical_family, equilibrium_of_energy, heat_bath_experiment, CanonicalFamily, HeatBathTable,
};
use muentropy::Error;

use output::{fmt, row, Run};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_GEOMETRY: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Geometry(String),
    Solver(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Geometry(_) => EXIT_GEOMETRY,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Geometry(m) => write!(f, "invalid geometry: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_) => CliError::Parse(msg),
            Error::EmptyOrUnbounded(_)
            | Error::Degenerate(_)
            | Error::IrrationalNormal(_)
            | Error::BoundaryPoint
            | Error::SlopeCondition(_) => CliError::Geometry(msg),
            Error::NonFinite(_)
            | Error::NoConvergence(_)
            | Error::OutOfRange { .. }
            | Error::NegativeHeatCapacity(_) => CliError::Solver(msg),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "muentropy",
    version,
    about = "Entropy, free energy and canonical states of toric systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system spec and print its vertices and total measures.
    Validate {
        #[arg(long)]
        system: String,
        /// Write the normalized spec (irredundant half spaces) here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Evaluate all functionals of `u(q)`.
    Report {
        #[arg(long)]
        system: String,
        /// Piecewise affine function as JSON (`{"pieces": [...]}`).
        #[arg(long, conflicts_with = "xi")]
        q: Option<PathBuf>,
        /// Linear function `⟨ξ, x⟩`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        #[command(flatten)]
        temp: Temperature,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the free energy at one temperature.
    Optimize {
        #[arg(long)]
        system: String,
        #[command(flatten)]
        temp: Temperature,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "result.json")]
        out: PathBuf,
    },
    /// Canonical states over a temperature grid, one report row per point.
    Sweep {
        #[arg(long)]
        system: String,
        /// `start:stop:step`, inclusive.
        #[arg(long = "T-grid")]
        t_grid: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    Thermo {
        #[command(subcommand)]
        command: ThermoCommand,
    },
    Estimates {
        #[command(subcommand)]
        command: EstimatesCommand,
    },
    Example {
        #[command(subcommand)]
        command: ExampleCommand,
    },
}

#[derive(Subcommand)]
enum ThermoCommand {
    /// `(T, U, S, F)` along a temperature grid with monotonicity checks.
    Family {
        #[arg(long)]
        system: String,
        #[arg(long = "T-grid")]
        t_grid: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "family.csv")]
        out: PathBuf,
    },
    /// Equilibrium state and temperature interval at a given internal energy.
    Equilibrium {
        #[arg(long)]
        system: String,
        #[arg(long = "U", allow_hyphen_values = true)]
        u: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "equilibrium.json")]
        out: PathBuf,
    },
    /// Couple the system to `N` reservoir copies at `T_R`.
    HeatBath {
        #[arg(long)]
        system: String,
        /// Reservoir system; the system itself when omitted.
        #[arg(long)]
        reservoir: Option<String>,
        #[arg(long = "U")]
        u: f64,
        #[arg(long = "T-R")]
        t_r: f64,
        #[arg(long = "N", value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        n: Vec<usize>,
        /// Temperature of the canonical probe state; the equilibrium state at `U` when omitted.
        #[arg(long = "probe-T")]
        probe_t: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "heat_bath.csv")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EstimatesCommand {
    /// Sampled Poincaré ratios, one row per trial, plus the worst witness.
    Poincare {
        #[arg(long)]
        system: String,
        /// Exponent; defaults to `n/(n-1)` (1 on a segment).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "poincare.csv")]
        out: PathBuf,
    },
    /// Sampled majorant `Û(x)` at random interior points.
    Rellich {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long = "fn-samples", default_value_t = 200)]
        fn_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rellich.csv")]
        out: PathBuf,
    },
    /// `u(x)` against `∫u / δ_P(x)` on random pairs.
    Meanvalue {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 360)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "meanvalue.csv")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExampleCommand {
    /// Curves and the `x_λ` table for the blow-up of the projective plane.
    #[command(name = "blowup-cp2")]
    BlowupCp2 {
        #[arg(long, default_value = "blowup-cp2")]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(multiple = false)]
struct Temperature {
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
}

impl Temperature {
    fn value(&self) -> f64 {
        match (self.t, self.lambda) {
            (Some(t), _) => t,
            (None, Some(l)) => temperature_from_lambda(l),
            (None, None) => 0.0,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Solver settings as JSON; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pieces: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverArgs {
    fn build(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?)
                .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?,
            None => SolverConfig::default(),
        };
        if let Some(k) = self.pieces {
            cfg.pieces = k;
        }
        if let Some(s) = self.starts {
            cfg.starts = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// A spec file, or one of `builtin:blowup-cp2`, `builtin:square`, `builtin:segment`.
fn load_spec(source: &str) -> Result<SystemSpec, CliError> {
    match source.strip_prefix("builtin:") {
        Some("blowup-cp2") => Ok(blowup::spec()),
        Some("square") => Ok(SystemSpec::from_system(&ToricSystem::lattice(cube(
            2, -1.0, 1.0,
        )?)?)),
        Some("segment") => Ok(SystemSpec::from_system(&ToricSystem::lattice(cube(
            1, -1.0, 1.0,
        )?)?)),
        Some(other) => Err(CliError::Parse(format!("unknown builtin system {other:?}"))),
        None => Ok(SystemSpec::from_json(&read(Path::new(source))?)?),
    }
}

fn load_system(source: &str) -> Result<(SystemSpec, ToricSystem), CliError> {
    let spec = load_spec(source)?;
    let sys = spec.build()?;
    Ok((SystemSpec::from_system(&sys), sys))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Parse(format!("temperature grid {text:?} is not start:stop:step"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b, h] = parts[..] else {
        return Err(bad());
    };
    if !(h > 0.0) || b < a {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}

fn short(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12 + 0.0;
    format!("{r}")
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn validate(system: &str, emit: Option<&Path>) -> Result<(), CliError> {
    let (spec, sys) = load_system(system)?;
    let p = sys.polytope();
    println!("dim={}", sys.dim());
    println!(
        "simple={}, vol={}, bdry={}",
        p.is_simple(),
        short(sys.volume()),
        short(sys.boundary_measure())
    );
    for (i, v) in p.vertices().iter().enumerate() {
        let coords: Vec<String> = v.iter().map(|&c| short(c)).collect();
        println!("vertex {i}: ({})", coords.join(", "));
    }
    if let Some(path) = emit {
        Run::new(command_line())
            .with_spec(&spec)
            .write(path, &(spec.to_json() + "\n"))?;
    }
    Ok(())
}

fn report_cmd(
    system: &str,
    q: Option<&Path>,
    xi: Option<&[f64]>,
    t: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (spec, sys) = load_system(system)?;
    let q = match (q, xi) {
        (Some(p), _) => PiecewiseAffineConvex::from_json(&read(p)?)?,
        (None, Some(xi)) => linear_from_vector(xi),
        (None, None) => PiecewiseAffineConvex::zero(sys.dim()),
    };
    let cfg = SolverConfig::default().quadrature;
    let r = report(&sys, t, &q, &cfg)?;
    let text = serde_json::to_string_pretty(&r).expect("report serializes");
    println!("{text}");
    if let Some(path) = out {
        Run::new(command_line())
            .with_spec(&spec)
            .with_config(&json!({ "quadrature": cfg, "T": t, "q": q }))
            .write_json(path, &r)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Diagnostics {
    converged: bool,
    starts_agreement: f64,
    start_values: Vec<f64>,
    piece_curve: Vec<(usize, f64)>,
    history: Vec<f64>,
}

#[derive(Serialize)]
struct OptimizeOutput {
    q_star: PiecewiseAffineConvex,
    report: FunctionalReport,
    diagnostics: Diagnostics,
}

fn optimize(system: &str, t: f64, solver: &SolverArgs, out: &Path) -> Result<(), CliError> {
    let (spec, sys) = load_system(system)?;
    let cfg = solver.build()?;
    let r = if t == 0.0 {
        canonical_distribution(&sys, t, &cfg)?
    } else {
        minimize_free_energy(&sys, t, &cfg)?
    };
    println!(
        "T={} F={} U={} S={} converged={}",
        fmt(t),
        fmt(r.report.free_energy),
        fmt(r.report.internal_energy),
        fmt(r.report.entropy),
        r.converged
    );
    let result = OptimizeOutput {
        q_star: r.q_star,
        report: r.report,
        diagnostics: Diagnostics {
            converged: r.converged,
            starts_agreement: r.starts_agreement,
            start_values: r.start_values,
            piece_curve: r.piece_curve,
            history: r.history,
        },
    };
    Run::new(command_line())
        .with_spec(&spec)
        .with_config(&json!({ "solver": cfg, "T": t }))
        .with_seed(cfg.seed)
        .write_json(out, &result)
}

fn family(
    system: &str,
    grid: &str,
    solver: &SolverArgs,
) -> Result<(SystemSpec, SolverConfig, CanonicalFamily), CliError> {
    let (spec, sys) = load_system(system)?;
    let cfg = solver.build()?;
    let fam = canonical_family(&sys, &parse_grid(grid)?, &cfg)?;
    let c = &fam.checks;
    println!(
        "checks passed={} u_drop={} s_drop={} f_drop={} f_convexity={} slack={}",
        c.passed(),
        fmt(c.u_drop),
        fmt(c.s_drop),
        fmt(c.f_drop),
        fmt(c.f_convexity),
        fmt(c.slack)
    );
    Ok((spec, cfg, fam))
}

fn sweep(system: &str, grid: &str, solver: &SolverArgs, out: &Path) -> Result<(), CliError> {
    let (spec, cfg, fam) = family(system, grid, solver)?;
    let rows: Vec<String> = fam
        .points
        .iter()
        .map(|p| p.result.report.csv_row())
        .collect();
    Run::new(command_line())
        .with_spec(&spec)
        .with_config(&json!({ "solver": cfg, "grid": grid }))
        .with_seed(cfg.seed)
        .write_csv(out, FunctionalReport::CSV_HEADER, &rows)
}

fn thermo(cmd: &ThermoCommand) -> Result<(), CliError> {
    match cmd {
        ThermoCommand::Family {
            system,
            t_grid,
            solver,
            out,
        } => {
            let (spec, cfg, fam) = family(system, t_grid, solver)?;
            Run::new(command_line())
                .with_spec(&spec)
                .with_config(&json!({ "solver": cfg, "grid": t_grid }))
                .with_seed(cfg.seed)
                .write_csv(out, CanonicalFamily::CSV_HEADER, &fam.csv_rows())
        }
        ThermoCommand::Equilibrium {
            system,
            u,
            solver,
            out,
        } => {
            let (spec, sys) = load_system(system)?;
            let cfg = solver.build()?;
            let eq = equilibrium_of_energy(&sys, *u, &cfg)?;
            println!(
                "U={} T in [{}, {}] singleton={}",
                fmt(eq.u_target),
                fmt(eq.t_interval[0]),
                fmt(eq.t_interval[1]),
                eq.singleton
            );
            let value = json!({
                "u_target": eq.u_target,
                "t_interval": eq.t_interval,
                "singleton": eq.singleton,
                "report": eq.report,
            });
            Run::new(command_line())
                .with_spec(&spec)
                .with_config(&json!({ "solver": cfg, "U": u }))
                .with_seed(cfg.seed)
                .write_json(out, &value)
        }
        ThermoCommand::HeatBath {
            system,
            reservoir,
            u,
            t_r,
            n,
            probe_t,
            solver,
            out,
        } => {
            let (spec, sys) = load_system(system)?;
            let (_, res) = load_system(reservoir.as_deref().unwrap_or(system))?;
            let cfg = solver.build()?;
            let probe = match probe_t {
                Some(t) => canonical_distribution(&sys, *t, &cfg)?.u_star,
                None => equilibrium_of_energy(&sys, *u, &cfg)?.u_eq,
            };
            let table = heat_bath_experiment(&sys, &res, *u, *t_r, n, &probe, &cfg)?;
            println!(
                "limit={} heat_capacity={}",
                fmt(table.limit),
                fmt(table.heat_capacity)
            );
            Run::new(command_line())
                .with_spec(&spec)
                .with_config(
                    &json!({ "solver": cfg, "U": u, "T_R": t_r, "N": n, "probe_T": probe_t }),
                )
                .with_seed(cfg.seed)
                .write_csv(out, HeatBathTable::CSV_HEADER, &table.csv_rows())
        }
    }
}

fn estimates(cmd: &EstimatesCommand) -> Result<(), CliError> {
    match cmd {
        EstimatesCommand::Poincare {
            system,
            p,
            trials,
            seed,
            out,
        } => {
            let (spec, sys) = load_system(system)?;
            let n = sys.dim() as f64;
            let p = p.unwrap_or(if sys.dim() == 1 { 1.0 } else { n / (n - 1.0) });
            let probe = poincare_probe(&sys, p, *trials, *seed)?;
            println!(
                "sup_ratio={} trials={}",
                fmt(probe.sup_ratio),
                probe.samples
            );
            let run = Run::new(command_line())
                .with_spec(&spec)
                .with_config(&json!({ "p": p, "trials": trials }))
                .with_seed(*seed);
            let rows: Vec<String> = probe
                .ratios
                .iter()
                .enumerate()
                .map(|(i, &r)| format!("{i},{}", fmt(r)))
                .collect();
            run.write_csv(out, "trial,ratio", &rows)?;
            run.write_json(&out.with_extension("witness.json"), &probe.witness)
        }
        EstimatesCommand::Rellich {
            system,
            points,
            fn_samples,
            seed,
            out,
        } => {
            let (spec, sys) = load_system(system)?;
            let xs: Vec<Vec<f64>> = (0..*points as u64)
                .map(|i| random_interior_point(&sys, 1e-3, &mut substream(seed.wrapping_add(1), i)))
                .collect();
            let values = rellich_majorant_probe(&sys, &xs, *fn_samples, *seed)?;
            let header: Vec<String> = (0..sys.dim())
                .map(|k| format!("x{k}"))
                .chain(["majorant".into()])
                .collect();
            let rows: Vec<String> = xs
                .iter()
                .zip(&values)
                .map(|(x, &v)| {
                    let mut vals = x.clone();
                    vals.push(v);
                    row(&vals)
                })
                .collect();
            Run::new(command_line())
                .with_spec(&spec)
                .with_config(&json!({ "points": points, "fn_samples": fn_samples }))
                .with_seed(*seed)
                .write_csv(out, &header.join(","), &rows)
        }
        EstimatesCommand::Meanvalue {
            system,
            trials,
            directions,
            seed,
            out,
        } => {
            use rayon::prelude::*;
            let (spec, sys) = load_system(system)?;
            let pairs: Vec<(f64, f64)> = (0..*trials as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(*seed, i);
                    let u = random_nonneg_pa(&sys, &mut rng)?;
                    let x = random_interior_point(&sys, 1e-6, &mut rng);
                    mean_value_check(&sys, &u, &x, *directions)
                })
                .collect::<Result<_, _>>()?;
            let violations = pairs.iter().filter(|(l, r)| l > r).count();
            println!("violations={violations} trials={trials}");
            let rows: Vec<String> = pairs
                .iter()
                .enumerate()
                .map(|(i, &(l, r))| format!("{i},{},{}", fmt(l), fmt(r)))
                .collect();
            Run::new(command_line())
                .with_spec(&spec)
                .with_config(&json!({ "trials": trials, "directions": directions }))
                .with_seed(*seed)
                .write_csv(out, "trial,u_x,bound", &rows)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { system, emit } => validate(&system, emit.as_deref()),
        Command::Report {
            system,
            q,
            xi,
            temp,
            out,
        } => report_cmd(
            &system,
            q.as_deref(),
            xi.as_deref(),
            temp.value(),
            out.as_deref(),
        ),
        Command::Optimize {
            system,
            temp,
            solver,
            out,
        } => optimize(&system, temp.value(), &solver, &out),
        Command::Sweep {
            system,
            t_grid,
            solver,
            out,
        } => sweep(&system, &t_grid, &solver, &out),
        Command::Thermo { command } => thermo(&command),
        Command::Estimates { command } => estimates(&command),
        Command::Example {
            command: ExampleCommand::BlowupCp2 { out },
        } => example::run(&out, command_line()),
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("MUENTROPY_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Parse(format!("MUENTROPY_THREADS={v:?} is not a positive integer"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Parse(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("muentropy: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn grids_include_the_end_point() {
        let g = parse_grid("0:2:0.25").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 2.0);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.5").is_err());
    }

    #[test]
    fn lambda_converts_to_temperature() {
        let t = Temperature {
            t: None,
            lambda: Some(-2.0 * PI),
        };
        assert!((t.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(
            CliError::from(Error::InvalidInput("x".into())).code(),
            EXIT_PARSE
        );
        assert_eq!(
            CliError::from(Error::EmptyOrUnbounded("x".into())).code(),
            EXIT_GEOMETRY
        );
        assert_eq!(
            CliError::from(Error::NoConvergence("x".into())).code(),
            EXIT_SOLVER
        );
    }
}
