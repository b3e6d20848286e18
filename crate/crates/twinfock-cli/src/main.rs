//! `twinfock` command line: emits the probability curves, uncertainty
//! scans, photon-number scaling tables and synthetic-count pipelines of
//! the twin-Fock projection-measurement scheme as CSV or JSON.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use twinfock::experiment::{fit_model, synthesize_counts, CountRecord, FitKind, FitResult};
use twinfock::metrology::{
    beating_region, limits, phase_uncertainty, scan_photon_number, DetectionModel, RegionOutcome,
};
use twinfock::projection::projection_constructive;

/// Exit codes: 0 ok, 2 usage error (from clap), 3 domain error, 4 I/O error.
#[derive(Debug)]
enum CliError {
    Domain(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<twinfock::Error> for CliError {
    fn from(e: twinfock::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Phase value in radians, optionally written as a multiple of pi
/// ("pi", "0.5pi", "-2pi").
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some(prefix) = t.strip_suffix("pi") {
        let factor = if prefix.is_empty() {
            1.0
        } else if prefix == "-" {
            -1.0
        } else {
            prefix.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?
        };
        return Ok(factor * std::f64::consts::PI);
    }
    t.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))
}

/// `start:stop:points` phase grid, e.g. `0:pi:181`.
#[derive(Clone, Copy, Debug)]
struct GridSpec {
    start: f64,
    stop: f64,
    points: usize,
}

impl GridSpec {
    fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + i as f64 * step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` is not start:stop:points"));
        }
        let start = parse_angle(parts[0])?;
        let stop = parse_angle(parts[1])?;
        let points: usize = parts[2].parse().map_err(|_| format!("bad point count `{}`", parts[2]))?;
        if points < 2 {
            return Err("grid needs at least 2 points".into());
        }
        if stop <= start {
            return Err("grid stop must exceed start".into());
        }
        Ok(GridSpec { start, stop, points })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// Twin-Fock projection measurement with N photon pairs.
    TwinFock,
    /// NOON-state fringe with N photons.
    Mes,
    /// Two-photon fringe with visibility V.
    P2,
    /// Four-photon fringe with pair distinguishability E/A.
    P4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Detection model kind.
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Photon-pair number N (twin-fock) or photon number (mes).
    #[arg(long)]
    n: Option<u64>,
    /// Visibility V in [0, 1] (p2).
    #[arg(long)]
    v: Option<f64>,
    /// Distinguishability E/A in [0, 1] (p4).
    #[arg(long)]
    r: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<DetectionModel, CliError> {
        let missing = |flag: &str| CliError::Domain(format!("model `{:?}` needs --{flag}", self.model));
        match self.model {
            ModelKind::TwinFock => {
                let n = self.n.ok_or_else(|| missing("n"))?;
                Ok(DetectionModel::twin_fock(n)?)
            }
            ModelKind::Mes => {
                let n = self.n.ok_or_else(|| missing("n"))?;
                Ok(DetectionModel::mes(n)?)
            }
            ModelKind::P2 => {
                let v = self.v.ok_or_else(|| missing("v"))?;
                Ok(DetectionModel::two_photon_visibility(v)?)
            }
            ModelKind::P4 => {
                let r = self.r.ok_or_else(|| missing("r"))?;
                Ok(DetectionModel::four_photon_distinguishability(r)?)
            }
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; stdout when omitted. Relative paths are resolved
    /// against $TWINFOCK_OUT_DIR when that is set.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Parser, Debug)]
#[command(name = "twinfock", version, about = "Twin-Fock projection-measurement phase metrology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probability-vs-phase curve P(phi) of a detection model.
    Curve {
        #[command(flatten)]
        model: ModelArgs,
        /// Phase grid start:stop:points (angles may use a `pi` suffix).
        #[arg(long)]
        grid: GridSpec,
        /// Cross-check each point against the constructive
        /// beam-splitter route (twin-fock only).
        #[arg(long)]
        check_constructive: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Phase uncertainty Delta(phi) with SQL and Heisenberg reference columns.
    Uncertainty {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        grid: GridSpec,
        /// Total photon number for the SQL/HL columns; defaults to the
        /// photons the model detects per event.
        #[arg(long)]
        n_total: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Delta(0) versus photon number for the twin-Fock scheme, N = 1..n-max.
    Scan {
        #[arg(long)]
        n_max: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Boundary of the region around phi = 0 where the model beats the SQL.
    Region {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_total: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// SQL and Heisenberg limits for a total photon number.
    Limits {
        #[arg(long)]
        n_total: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw Poisson coincidence counts from a model over a phase grid.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        grid: GridSpec,
        /// Peak coincidence rate (counts per exposure unit at P = 1).
        #[arg(long)]
        peak_rate: f64,
        /// Exposure per grid point.
        #[arg(long, default_value_t = 1.0)]
        exposure: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Least-squares fit of counts (CSV phi,counts,exposure) to p2 or p4.
    Fit {
        /// Input CSV file, as written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        /// Which model to fit.
        #[arg(long, value_enum)]
        kind: FitKindArg,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FitKindArg {
    P2,
    P4,
}

impl From<FitKindArg> for FitKind {
    fn from(k: FitKindArg) -> Self {
        match k {
            FitKindArg::P2 => FitKind::TwoPhoton,
            FitKindArg::P4 => FitKind::FourPhoton,
        }
    }
}

/// 12 significant digits; "inf" is the only non-numeric token.
fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn json_num(x: f64) -> Value {
    if x.is_infinite() {
        Value::String("inf".into())
    } else {
        json!(x)
    }
}

/// One output table: named columns of equal length.
enum Column {
    Num(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

struct Table {
    columns: Vec<(&'static str, Column)>,
}

impl Table {
    fn render_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.columns.iter().map(|(name, _)| *name).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        let rows = match &self.columns[0].1 {
            Column::Num(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Text(v) => v.len(),
        };
        for i in 0..rows {
            let cells: Vec<String> = self
                .columns
                .iter()
                .map(|(_, col)| match col {
                    Column::Num(v) => fmt_num(v[i]),
                    Column::Int(v) => v[i].to_string(),
                    Column::Text(v) => v[i].clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        for (name, col) in &self.columns {
            let arr: Vec<Value> = match col {
                Column::Num(v) => v.iter().map(|&x| json_num(x)).collect(),
                Column::Int(v) => v.iter().map(|&x| json!(x)).collect(),
                Column::Text(v) => v.iter().map(|x| json!(x)).collect(),
            };
            obj.insert((*name).to_string(), Value::Array(arr));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
        s.push('\n');
        s
    }
}

fn write_output(out: &OutputArgs, table: &Table) -> Result<(), CliError> {
    let body = match out.format {
        OutputFormat::Csv => table.render_csv(),
        OutputFormat::Json => table.render_json(),
    };
    match &out.output {
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            let path = match std::env::var_os("TWINFOCK_OUT_DIR") {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            std::fs::write(&path, body)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
    }
}

fn read_count_csv(path: &PathBuf) -> Result<Vec<CountRecord>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Domain("empty input file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize, CliError> {
        names
            .iter()
            .position(|&c| c == name)
            .ok_or_else(|| CliError::Domain(format!("input is missing column `{name}`")))
    };
    let (ci_phi, ci_counts, ci_exp) = (col("phi")?, col("counts")?, col("exposure")?);
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Domain(format!("bad value on data line {}", lineno + 1)))
        };
        let counts = parse(ci_counts)?;
        if counts < 0.0 || counts.fract() != 0.0 {
            return Err(CliError::Domain(format!(
                "counts must be a non-negative integer on data line {}",
                lineno + 1
            )));
        }
        records.push(CountRecord {
            phi: parse(ci_phi)?,
            counts: counts as u64,
            exposure: parse(ci_exp)?,
        });
    }
    Ok(records)
}

fn fit_rows(results: &[&FitResult]) -> Table {
    Table {
        columns: vec![
            (
                "parameter",
                Column::Text(results.iter().map(|r| r.parameter_name.to_string()).collect()),
            ),
            ("estimate", Column::Num(results.iter().map(|r| r.estimate).collect())),
            ("std_error", Column::Num(results.iter().map(|r| r.std_error).collect())),
            (
                "reduced_chi_square",
                Column::Num(results.iter().map(|r| r.reduced_chi_square).collect()),
            ),
            (
                "n_points",
                Column::Int(results.iter().map(|r| r.n_points as i64).collect()),
            ),
            (
                "out_of_range",
                Column::Text(results.iter().map(|r| r.out_of_range.to_string()).collect()),
            ),
        ],
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Curve {
            model,
            grid,
            check_constructive,
            out,
        } => {
            let m = model.build()?;
            let phis = grid.values();
            let ps: Vec<f64> = phis.iter().map(|&phi| m.probability(phi)).collect();
            if check_constructive {
                let n_pairs = match &m {
                    DetectionModel::TwinFock { n_pairs, .. } => *n_pairs,
                    _ => {
                        return Err(CliError::Domain(
                            "--check-constructive applies to --model twin-fock only".into(),
                        ))
                    }
                };
                for (&phi, &p) in phis.iter().zip(&ps) {
                    let q = projection_constructive(n_pairs, phi)?;
                    if (p - q).abs() > 1e-10 {
                        return Err(CliError::Domain(format!(
                            "constructive cross-check failed at phi = {phi}: {p} vs {q}"
                        )));
                    }
                }
            }
            write_output(
                &out,
                &Table {
                    columns: vec![("phi", Column::Num(phis)), ("p", Column::Num(ps))],
                },
            )
        }
        Command::Uncertainty {
            model,
            grid,
            n_total,
            out,
        } => {
            let m = model.build()?;
            let lim = limits(n_total.unwrap_or_else(|| m.total_photons()))?;
            let phis = grid.values();
            let mut p = Vec::with_capacity(phis.len());
            let mut dp = Vec::with_capacity(phis.len());
            let mut delta = Vec::with_capacity(phis.len());
            for &phi in &phis {
                let point = phase_uncertainty(&m, phi);
                p.push(point.p);
                dp.push(point.dp_dphi);
                delta.push(point.delta_phi);
            }
            let rows = phis.len();
            write_output(
                &out,
                &Table {
                    columns: vec![
                        ("phi", Column::Num(phis)),
                        ("p", Column::Num(p)),
                        ("dp_dphi", Column::Num(dp)),
                        ("delta_phi", Column::Num(delta)),
                        ("sql", Column::Num(vec![lim.sql; rows])),
                        ("hl", Column::Num(vec![lim.hl; rows])),
                    ],
                },
            )
        }
        Command::Scan { n_max, out } => {
            let rows = scan_photon_number(n_max)?;
            write_output(
                &out,
                &Table {
                    columns: vec![
                        ("n", Column::Int(rows.iter().map(|r| r.n_pairs as i64).collect())),
                        ("n_total", Column::Int(rows.iter().map(|r| r.n_total as i64).collect())),
                        (
                            "delta_phi",
                            Column::Num(rows.iter().map(|r| r.delta_phi_at_zero).collect()),
                        ),
                        ("sql", Column::Num(rows.iter().map(|r| r.sql).collect())),
                        ("hl", Column::Num(rows.iter().map(|r| r.hl).collect())),
                    ],
                },
            )
        }
        Command::Region { model, n_total, out } => {
            let m = model.build()?;
            let n_total = n_total.unwrap_or_else(|| m.total_photons());
            let lim = limits(n_total)?;
            let (outcome, phi) = match beating_region(&m, n_total)? {
                RegionOutcome::Boundary(b) => ("boundary", b),
                RegionOutcome::Stationary(s) => ("stationary", s),
                RegionOutcome::NotBeating => ("not_beating", f64::INFINITY),
            };
            write_output(
                &out,
                &Table {
                    columns: vec![
                        ("n_total", Column::Int(vec![n_total as i64])),
                        ("sql", Column::Num(vec![lim.sql])),
                        ("outcome", Column::Text(vec![outcome.to_string()])),
                        ("phi", Column::Num(vec![phi])),
                    ],
                },
            )
        }
        Command::Limits { n_total, out } => {
            let lim = limits(n_total)?;
            write_output(
                &out,
                &Table {
                    columns: vec![
                        ("n_total", Column::Int(vec![lim.n_total as i64])),
                        ("sql", Column::Num(vec![lim.sql])),
                        ("hl", Column::Num(vec![lim.hl])),
                    ],
                },
            )
        }
        Command::Simulate {
            model,
            grid,
            peak_rate,
            exposure,
            seed,
            out,
        } => {
            let m = model.build()?;
            let records = synthesize_counts(&m, peak_rate, &grid.values(), exposure, seed)?;
            write_output(
                &out,
                &Table {
                    columns: vec![
                        ("phi", Column::Num(records.iter().map(|r| r.phi).collect())),
                        ("counts", Column::Int(records.iter().map(|r| r.counts as i64).collect())),
                        ("exposure", Column::Num(records.iter().map(|r| r.exposure).collect())),
                    ],
                },
            )
        }
        Command::Fit { input, kind, out } => {
            let records = read_count_csv(&input)?;
            let (shape, rate) = fit_model(&records, kind.into())?;
            write_output(&out, &fit_rows(&[&shape, &rate]))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twinfock: {e}");
            ExitCode::from(e.code())
        }
    }
}
