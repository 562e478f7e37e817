use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use muentropy::blowup;
use muentropy::optimizer::{free_energy_from_na_mu, optimize_vector, SolverConfig};

fn muentropy(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muentropy"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_reports_measures() {
    let dir = tempfile::tempdir().unwrap();
    let o = muentropy(dir.path(), &["validate", "--system", "builtin:blowup-cp2"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("simple=true, vol=4, bdry=8"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn validate_round_trips_the_normalized_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"dim": 2, "measure": "lattice", "halfspaces": [
        {"normal": [1, 0], "offset": 0}, {"normal": [0, 1], "offset": 0},
        {"normal": [-1, 0], "offset": 1}, {"normal": [0, -1], "offset": 1},
        {"normal": [-1, -1], "offset": 5}]}"#;
    fs::write(dir.path().join("unit.json"), spec).unwrap();
    let a = muentropy(
        dir.path(),
        &["validate", "--system", "unit.json", "--emit", "norm.json"],
    );
    assert!(a.status.success());
    assert!(stdout(&a).contains("vol=1, bdry=4"), "{}", stdout(&a));
    assert!(dir.path().join("norm.json.manifest.json").exists());
    let b = muentropy(dir.path(), &["validate", "--system", "norm.json"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let empty = r#"{"dim": 2, "measure": "lattice", "halfspaces": [
        {"normal": [1, 0], "offset": 0}, {"normal": [-1, 0], "offset": -1},
        {"normal": [0, 1], "offset": 1}, {"normal": [0, -1], "offset": 1}]}"#;
    fs::write(dir.path().join("empty.json"), empty).unwrap();
    fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let code = |args: &[&str]| muentropy(dir.path(), args).status.code();
    assert_eq!(code(&["validate", "--system", "empty.json"]), Some(3));
    assert_eq!(code(&["validate", "--system", "broken.json"]), Some(2));
    assert_eq!(code(&["validate", "--system", "missing.json"]), Some(2));
    assert_eq!(code(&["validate", "--bogus"]), Some(2));
    assert_eq!(
        code(&[
            "thermo",
            "equilibrium",
            "--system",
            "builtin:blowup-cp2",
            "--U",
            "5"
        ]),
        Some(4)
    );
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_muentropy"))
            .args(["validate", "--system", "builtin:square"])
            .env("MUENTROPY_THREADS", v)
            .current_dir(dir.path())
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("1"), Some(0));
    assert_eq!(run("zero"), Some(2));
}

#[test]
fn blowup_example_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = muentropy(dir.path(), &["example", "blowup-cp2", "--out", "ex"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ex = dir.path().join("ex");
    let (header, rows) = csv(&ex.join("curve.csv"));
    assert_eq!(header.last().unwrap(), "max_rel_discrepancy");
    assert_eq!(rows.len(), 601);
    assert!(rows.iter().all(|r| r[5] <= 1e-8));
    let origin = rows.iter().find(|r| r[0] == 0.0).unwrap();
    assert!((origin[2] + 2.0 * std::f64::consts::PI * 2.0).abs() < 1e-12);

    let (_, table) = csv(&ex.join("x_lambda.csv"));
    let xs: Vec<f64> = table.iter().map(|r| r[2]).collect();
    assert_eq!(xs.len(), 4);
    assert!(xs.windows(2).all(|w| w[0] < w[1]) && xs[3] < 0.0, "{xs:?}");

    // The criticality curve passes through the table's points.
    let (_, curve) = csv(&ex.join("lambda_curve.csv"));
    for row in &table {
        let (x, lambda) = (row[2], row[1]);
        let k = curve
            .windows(2)
            .position(|w| w[0][0] <= x && x <= w[1][0])
            .unwrap();
        let (a, b) = (&curve[k], &curve[k + 1]);
        let interp = a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0]);
        // Linear interpolation error is at most max|f''| h² / 8.
        let second = (curve[k + 2][1] - 2.0 * b[1] + a[1])
            .abs()
            .max((b[1] - 2.0 * a[1] + curve[k - 1][1]).abs());
        assert!(
            (interp - lambda).abs() <= 0.25 * second + 1e-6,
            "{interp} vs {lambda}"
        );
    }
    for f in ["curve.csv", "lambda_curve.csv", "x_lambda.csv"] {
        assert!(ex.join(format!("{f}.manifest.json")).exists());
    }
}

#[test]
fn optimize_agrees_with_the_linear_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = muentropy(
        dir.path(),
        &[
            "optimize",
            "--system",
            "builtin:blowup-cp2",
            "--T",
            "0",
            "--out",
            "r.json",
        ],
    );
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let f = v["report"]["F"].as_f64().unwrap();
    let sys = blowup::system();
    let lin = optimize_vector(&sys, 0.0, &[0.0, 0.0], &SolverConfig::default()).unwrap();
    let oracle = free_energy_from_na_mu(&sys, 0.0, lin.value);
    assert!((f - oracle).abs() <= 1e-3 * oracle.abs(), "{f} vs {oracle}");
    assert!(v["q_star"]["pieces"].is_array());
    assert!(v["diagnostics"]["converged"].as_bool().unwrap());
}

#[test]
fn sweep_on_the_square_is_flat_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--system",
        "builtin:square",
        "--T-grid",
        "0:2:0.25",
        "--out",
        "a.csv",
    ];
    assert!(muentropy(dir.path(), &args).status.success());
    let mut again = args;
    again[6] = "b.csv";
    assert!(muentropy(dir.path(), &again).status.success());
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let (header, rows) = csv(&dir.path().join("a.csv"));
    let f = header.iter().position(|h| h == "F").unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| (r[f] - 2.0).abs() < 1e-8));
}

#[test]
fn poincare_estimates_emit_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let o = muentropy(
        dir.path(),
        &[
            "estimates",
            "poincare",
            "--system",
            "builtin:blowup-cp2",
            "--trials",
            "200",
            "--out",
            "p.csv",
        ],
    );
    assert!(o.status.success());
    let (header, rows) = csv(&dir.path().join("p.csv"));
    assert_eq!(header, ["trial", "ratio"]);
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[1].is_finite()));
    assert!(dir.path().join("p.witness.json").exists());
}

#[test]
fn heat_bath_table_approaches_the_reservoir() {
    let dir = tempfile::tempdir().unwrap();
    let o = muentropy(
        dir.path(),
        &[
            "thermo",
            "heat-bath",
            "--system",
            "builtin:blowup-cp2",
            "--U",
            "1.9786",
            "--T-R",
            "1",
            "--N",
            "1,4,16",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&dir.path().join("heat_bath.csv"));
    assert_eq!(header, ["N", "T_N", "dS_N"]);
    let gaps: Vec<f64> = rows.iter().map(|r| (r[1] - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}
