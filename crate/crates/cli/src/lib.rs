//! Command dispatch and output formatting for the `curvcanon` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use curvcanon::curvature::{self, CurvatureSample, GridParams};
use curvcanon::quadrature::QuadParams;
use curvcanon::symprod;
use curvcanon::{gram_matrix, Chart, CurveKind, CurveSpec, Tolerances};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PROPERTY_FAIL: i32 = 2;

/// Largest relative Gauss–Bonnet error accepted by `gauss-bonnet`.
pub const GAUSS_BONNET_TOL: f64 = 0.01;
/// Agreement tolerance used by `symprod` for `d = 1`.
pub const AGREEMENT_TOL_D1: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid curve {curve}: {source}")]
    Validation { curve: String, source: curvcanon::Error },
    #[error(transparent)]
    Core(#[from] curvcanon::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(curvcanon::Error::AgreementFailed { .. }) => EXIT_PROPERTY_FAIL,
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Info,
    Gram,
    Curvature,
    Scan,
    Weierstrass,
    GaussBonnet,
    Symprod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// On-disk curve description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub kind: CurveKind,
    /// `[re, im]` pairs: ascending powers of `f`, or graded-lex for quartics.
    #[serde(deserialize_with = "nonempty")]
    pub coeffs: Vec<Complex64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn nonempty<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
    let v = Vec::<Complex64>::deserialize(d)?;
    if v.is_empty() {
        return Err(serde::de::Error::custom("coeffs must not be empty"));
    }
    Ok(v)
}

pub fn read_curve_file(path: &Path) -> Result<CurveFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn build_curve(file: &CurveFile) -> Result<CurveSpec, CliError> {
    CurveSpec::new(file.kind, &file.coeffs, file.tolerances).map_err(|source| CliError::Validation {
        curve: serde_json::to_string(file).unwrap_or_default(),
        source,
    })
}

pub fn load_curve_spec(path: &Path) -> Result<CurveSpec, CliError> {
    build_curve(&read_curve_file(path)?)
}

/// Point selection for `curvature`.
#[derive(Clone, Debug, Serialize)]
pub struct PointSpec {
    pub x: Complex64,
    /// Explicit `y`; otherwise sheet `sheet` of the fibre over `x`.
    pub y: Option<Complex64>,
    pub sheet: usize,
    /// Chart to evaluate in; the better-conditioned affine chart when unset.
    pub chart: Option<Chart>,
}

/// Fully resolved run parameters; echoed into every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub curve_file: PathBuf,
    pub curve: CurveFile,
    pub format: Format,
    pub seed: u64,
    pub d: usize,
    pub trials: usize,
    pub tol_theta: f64,
    pub grid: GridParams,
    pub quad: QuadParams,
    pub point: Option<PointSpec>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, curve_file: PathBuf, curve: CurveFile) -> Self {
        RunConfig {
            command,
            curve_file,
            curve,
            format: default_format(command),
            seed: 0,
            d: 2,
            trials: 100,
            tol_theta: GridParams::default().tol_theta,
            grid: GridParams::default(),
            quad: QuadParams::default(),
            point: None,
            output: None,
        }
    }
}

pub fn default_format(command: Command) -> Format {
    match command {
        Command::Scan | Command::Weierstrass => Format::Csv,
        _ => Format::Json,
    }
}

/// Rendered output and the exit code it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
}

/// Runs one command.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let spec = build_curve(&config.curve)?;
    let mut grid = config.grid.clone();
    grid.tol_theta = config.tol_theta;
    let body = match config.command {
        Command::Info => info(&spec),
        Command::Gram => {
            let gram = gram_matrix(&spec, &config.quad)?;
            let s = gram.summary();
            let mut rows = Vec::new();
            for (name, m) in [("g", &s.g), ("t", &s.t)] {
                for (i, row) in m.iter().enumerate() {
                    for (j, z) in row.iter().enumerate() {
                        rows.push(vec![name.to_string(), i.to_string(), j.to_string(), fmt(z[0]), fmt(z[1])]);
                    }
                }
            }
            Body { result: serde_json::to_value(&s).unwrap(), header: "matrix,row,col,re,im", rows, pass: true }
        }
        Command::Curvature => curvature_cmd(&spec, config)?,
        Command::Scan => scan_cmd(&spec, config, &grid)?,
        Command::Weierstrass => weierstrass_cmd(&spec, config, &grid)?,
        Command::GaussBonnet => {
            let gram = gram_matrix(&spec, &config.quad)?;
            let gb = curvature::gauss_bonnet_total(&spec, &gram, &config.quad)?;
            let pass = gb.rel_error <= GAUSS_BONNET_TOL && gb.quadrature.rel_error <= config.quad.target_rel;
            let rows = vec![
                vec!["total".into(), fmt(gb.total)],
                vec!["expected".into(), fmt(gb.expected)],
                vec!["rel_error".into(), fmt(gb.rel_error)],
            ];
            let mut result = serde_json::to_value(&gb).unwrap();
            result["pass"] = json!(pass);
            Body { result, header: "key,value", rows, pass }
        }
        Command::Symprod => symprod_cmd(&spec, config)?,
    };
    Ok(Outcome { text: render(config, &body), exit_code: if body.pass { EXIT_OK } else { EXIT_PROPERTY_FAIL } })
}

struct Body {
    result: Value,
    header: &'static str,
    rows: Vec<Vec<String>>,
    pass: bool,
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn info(spec: &CurveSpec) -> Body {
    let gate: Vec<_> = (1..=3).map(|d| spec.gonality_gate(d)).collect();
    let result = json!({
        "kind": spec.kind(),
        "genus": spec.genus(),
        "branch_points": spec.branch_points(),
        "infinite_branch_point": spec.infinite_branch_point(),
        "ramifications": spec.ramifications(),
        "gonality_lower": spec.gonality_lower(),
        "has_inf_chart": spec.has_inf_chart(),
        "gonality_gate": gate,
    });
    let rows = vec![
        vec!["genus".into(), spec.genus().to_string()],
        vec!["gonality_lower".into(), spec.gonality_lower().to_string()],
        vec!["ramification_points".into(), spec.ramifications().len().to_string()],
    ];
    Body { result, header: "key,value", rows, pass: true }
}

const SAMPLE_HEADER: &str = "re_x,im_x,re_y,im_y,chart,lambda,theta,degeneracy";

fn sample_row(s: &CurvatureSample) -> Vec<String> {
    vec![
        fmt(s.point.x.re),
        fmt(s.point.x.im),
        fmt(s.point.y.re),
        fmt(s.point.y.im),
        s.point.chart.name().to_string(),
        fmt(s.lambda),
        fmt(s.theta),
        fmt(s.degeneracy),
    ]
}

fn curvature_cmd(spec: &CurveSpec, config: &RunConfig) -> Result<Body, CliError> {
    let ps = config.point.as_ref().ok_or_else(|| CliError::Usage("curvature needs --x".into()))?;
    let y = match ps.y {
        Some(y) => y,
        None => {
            let fib = spec.fiber(ps.x);
            *fib.get(ps.sheet).ok_or_else(|| CliError::Usage(format!("sheet {} out of range 0..{}", ps.sheet, fib.len())))?
        }
    };
    let chart = ps.chart.unwrap_or_else(|| spec.best_chart(ps.x, y));
    let p = spec.point(ps.x, y, chart)?;
    let gram = gram_matrix(spec, &config.quad)?;
    let s = curvature::curvature_at(spec, &gram, &p)?;
    let pass = s.theta <= config.tol_theta;
    let mut result = serde_json::to_value(&s).unwrap();
    result["pass"] = json!(pass);
    Ok(Body { result, header: SAMPLE_HEADER, rows: vec![sample_row(&s)], pass })
}

fn scan_cmd(spec: &CurveSpec, config: &RunConfig, grid: &GridParams) -> Result<Body, CliError> {
    let gram = gram_matrix(spec, &config.quad)?;
    let samples = curvature::scan_curvature(spec, &gram, grid)?;
    let summary = curvature::summarize_scan(spec, &samples, grid.tol_theta, 0.2);
    let pass = summary.violations == 0;
    let result = json!({
        "summary": summary,
        "samples": samples,
    });
    Ok(Body { result, header: SAMPLE_HEADER, rows: samples.iter().map(sample_row).collect(), pass })
}

fn weierstrass_cmd(spec: &CurveSpec, config: &RunConfig, grid: &GridParams) -> Result<Body, CliError> {
    let gram = gram_matrix(spec, &config.quad)?;
    let samples = curvature::scan_curvature(spec, &gram, grid)?;
    let clusters = curvature::degenerate_clusters(spec, &samples, grid);
    let summary = curvature::summarize_scan(spec, &samples, grid.tol_theta, 0.2);
    // Hyperelliptic: one cluster per finite branch point. Otherwise: none.
    let expected: &[Complex64] = match spec.kind() {
        CurveKind::Hyperelliptic => spec.branch_points(),
        CurveKind::PlaneQuartic => &[],
    };
    let matched = clusters.iter().all(|c| expected.iter().any(|b| (c.point.x - b).norm() < 1e-3));
    let covered = expected.iter().all(|b| clusters.iter().any(|c| (c.point.x - b).norm() < 1e-3));
    let pass = clusters.len() == expected.len() && matched && covered && summary.violations == 0;
    let rows = clusters
        .iter()
        .map(|c| {
            vec![
                fmt(c.point.x.re),
                fmt(c.point.x.im),
                fmt(c.point.y.re),
                fmt(c.point.y.im),
                c.point.chart.name().to_string(),
                fmt(c.theta),
                fmt(c.degeneracy),
                c.members.to_string(),
            ]
        })
        .collect();
    let result = json!({
        "clusters": clusters,
        "expected": expected.len(),
        "pass": pass,
        "summary": summary,
    });
    Ok(Body { result, header: "re_x,im_x,re_y,im_y,chart,theta,degeneracy,members", rows, pass })
}

fn symprod_cmd(spec: &CurveSpec, config: &RunConfig) -> Result<Body, CliError> {
    let gram = gram_matrix(spec, &config.quad)?;
    let tol = if config.d == 1 { AGREEMENT_TOL_D1 } else { symprod::AGREEMENT_TOL };
    let report = symprod::agreement_report(spec, &gram, config.d, config.trials, config.seed, tol)?;
    let pass = report.failures.is_empty();
    let rows = (0..report.trials)
        .map(|k| {
            vec![
                k.to_string(),
                fmt(report.rel_devs[k]),
                fmt(report.sigma_d[k]),
                report.spectra[k].iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";"),
            ]
        })
        .collect();
    let mut result = serde_json::to_value(&report).unwrap();
    result["tolerance"] = json!(tol);
    result["pass"] = json!(pass);
    Ok(Body { result, header: "trial,rel_dev,sigma_d,spectrum", rows, pass })
}

/// `a.b=value` lines for every leaf of a JSON value, in key order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        _ => out.push(format!("{prefix}={v}")),
    }
}

fn render(config: &RunConfig, body: &Body) -> String {
    let cfg = serde_json::to_value(config).unwrap();
    match config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({ "config": cfg, "result": body.result })).unwrap();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut lines = Vec::new();
            flatten("", &cfg, &mut lines);
            let mut s = String::new();
            for l in lines {
                writeln!(s, "# {l}").unwrap();
            }
            writeln!(s, "{}", body.header).unwrap();
            for row in &body.rows {
                writeln!(s, "{}", row.join(",")).unwrap();
            }
            let mut summary = Vec::new();
            if let Some(sm) = body.result.get("summary") {
                flatten("summary", sm, &mut summary);
            }
            summary.push(format!("pass={}", body.pass));
            for l in summary {
                writeln!(s, "# {l}").unwrap();
            }
            s
        }
    }
}
