use std::process::{Command, Output};

fn twinfock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinfock"))
        .args(args)
        .output()
        .expect("spawn twinfock")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn num(cell: &str) -> f64 {
    if cell == "inf" {
        f64::INFINITY
    } else {
        cell.parse().unwrap()
    }
}

#[test]
fn curve_traces_the_four_photon_closed_form() {
    let out = twinfock(&["curve", "--model", "twin-fock", "--n", "2", "--grid", "0:pi:181"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header, vec!["phi", "p"]);
    assert_eq!(rows.len(), 181);
    for row in &rows {
        let phi = num(&row[0]);
        let p = num(&row[1]);
        let expected = (0.75 * (2.0 * phi).cos() + 0.25).powi(2);
        assert!((p - expected).abs() < 1e-10, "phi={phi}: {p} vs {expected}");
    }
}

#[test]
fn curve_constructive_cross_check_passes() {
    let out = twinfock(&[
        "curve",
        "--model",
        "twin-fock",
        "--n",
        "5",
        "--grid",
        "0:pi:41",
        "--check-constructive",
    ]);
    assert!(out.status.success());
}

#[test]
fn uncertainty_minimum_matches_four_photon_value() {
    let out = twinfock(&[
        "uncertainty",
        "--model",
        "p4",
        "--r",
        "0.93",
        "--grid",
        "0:pi:721",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, vec!["phi", "p", "dp_dphi", "delta_phi", "sql", "hl"]);
    let min = rows.iter().map(|r| num(&r[3])).fold(f64::INFINITY, f64::min);
    assert!((min - 0.2904).abs() < 0.001, "min delta_phi = {min}");
    assert!(text.contains(",inf,"), "expected an inf token at the divergence");
}

#[test]
fn scan_single_row_hits_the_two_photon_heisenberg_limit() {
    let out = twinfock(&["scan", "--n-max", "1"]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    let delta = num(&rows[0][2]);
    let hl = num(&rows[0][4]);
    assert!((delta - 0.5).abs() < 1e-12);
    assert!((delta - hl).abs() < 1e-12);
}

#[test]
fn simulate_is_byte_deterministic_and_fit_recovers_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let args = [
        "simulate",
        "--model",
        "p2",
        "--v",
        "0.953",
        "--grid",
        "0:pi:25",
        "--peak-rate",
        "8837",
        "--seed",
        "11",
        "--output",
        counts.to_str().unwrap(),
    ];
    assert!(twinfock(&args).status.success());
    let first = std::fs::read(&counts).unwrap();
    assert!(twinfock(&args).status.success());
    assert_eq!(first, std::fs::read(&counts).unwrap());

    let out = twinfock(&["fit", "--input", counts.to_str().unwrap(), "--kind", "p2"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(
        header,
        vec!["parameter", "estimate", "std_error", "reduced_chi_square", "n_points", "out_of_range"]
    );
    assert_eq!(rows[0][0], "V");
    let estimate = num(&rows[0][1]);
    let std_error = num(&rows[0][2]);
    assert!(
        (estimate - 0.953).abs() <= 2.0 * std_error,
        "V = {estimate} +/- {std_error}"
    );
    assert_eq!(rows[1][0], "rate");
    assert!((num(&rows[1][1]) - 8837.0).abs() < 500.0);
}

#[test]
fn json_output_mirrors_columns_and_encodes_inf() {
    let out = twinfock(&[
        "uncertainty",
        "--model",
        "mes",
        "--n",
        "4",
        "--grid",
        "0:pi:9",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["phi", "p", "dp_dphi", "delta_phi", "sql", "hl"] {
        assert_eq!(value[key].as_array().unwrap().len(), 9, "column {key}");
    }
}

#[test]
fn exit_codes_are_distinct() {
    // usage: unknown flag
    let out = twinfock(&["curve", "--model", "twin-fock", "--n", "2", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // usage: malformed grid
    let out = twinfock(&["curve", "--model", "twin-fock", "--n", "2", "--grid", "pi:0:5"]);
    assert_eq!(out.status.code(), Some(2));
    // domain: parameter out of range
    let out = twinfock(&["curve", "--model", "p2", "--v", "1.5", "--grid", "0:pi:5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
    // domain: missing model parameter
    let out = twinfock(&["curve", "--model", "p4", "--grid", "0:pi:5"]);
    assert_eq!(out.status.code(), Some(3));
    // i/o: unwritable output path
    let out = twinfock(&[
        "scan",
        "--n-max",
        "2",
        "--output",
        "/nonexistent-dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn out_dir_env_var_resolves_relative_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_twinfock"))
        .args(["limits", "--n-total", "4", "--output", "limits.csv"])
        .env("TWINFOCK_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("limits.csv")).unwrap();
    assert!(text.starts_with("n_total,sql,hl\n"));
}

#[test]
fn region_reports_the_mes_stationary_point() {
    let out = twinfock(&["region", "--model", "mes", "--n", "4"]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows[0][2], "stationary");
    let phi = num(&rows[0][3]);
    assert!((phi - std::f64::consts::FRAC_PI_4).abs() < 1e-4, "phi = {phi}");
}
