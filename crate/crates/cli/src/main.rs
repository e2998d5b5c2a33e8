use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use curvcanon::Chart;
use curvcanon_cli::{default_format, read_curve_file, run, CliError, Command, Format, PointSpec, RunConfig, EXIT_ERROR};
use num_complex::Complex64;

/// Canonical metric, curvature and symmetric-product checks on explicit curves.
///
/// Exit status: 0 on success, 1 on errors, 2 when a property check fails.
/// CURVCANON_THREADS sets the worker thread count.
#[derive(Parser, Debug)]
#[command(name = "curvcanon", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Curve description (JSON).
    #[arg(long)]
    curve: PathBuf,
    /// Divisor degree for `symprod`.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Random divisors for `symprod`.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Points per side of the scan grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    quad_target_rel: Option<f64>,
    #[arg(long)]
    quad_max_level: Option<usize>,
    #[arg(long)]
    quad_far_radius: Option<f64>,
    /// Largest accepted curvature value.
    #[arg(long)]
    tol_theta: Option<f64>,
    /// Point for `curvature`, as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    x: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    y: Option<Complex64>,
    /// Sheet over `x` when `--y` is not given.
    #[arg(long, default_value_t = 0)]
    sheet: usize,
    /// x, y or inf.
    #[arg(long, value_parser = parse_chart)]
    chart: Option<Chart>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Complex64::new(p(re)?, p(im)?))
}

fn parse_chart(s: &str) -> Result<Chart, String> {
    match s {
        "x" => Ok(Chart::X),
        "y" => Ok(Chart::Y),
        "inf" => Ok(Chart::Inf),
        _ => Err(format!("unknown chart {s:?} (expected x, y or inf)")),
    }
}

fn configure(args: Args) -> Result<RunConfig, CliError> {
    let curve = read_curve_file(&args.curve)?;
    let mut cfg = RunConfig::new(args.command, args.curve, curve);
    cfg.format = args.format.unwrap_or(default_format(args.command));
    cfg.seed = args.seed;
    cfg.d = args.d;
    cfg.trials = args.trials;
    if let Some(n) = args.grid {
        cfg.grid.n = n;
    }
    if let Some(t) = args.tol_theta {
        cfg.tol_theta = t;
    }
    if let Some(v) = args.quad_target_rel {
        cfg.quad.target_rel = v;
    }
    if let Some(v) = args.quad_max_level {
        cfg.quad.max_level = v;
    }
    cfg.quad.far_radius = args.quad_far_radius.or(cfg.quad.far_radius);
    if let Some(x) = args.x {
        cfg.point = Some(PointSpec { x, y: args.y, sheet: args.sheet, chart: args.chart });
    }
    cfg.output = args.output;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // usage errors must not be confused with property failures
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("CURVCANON_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = configure(args).and_then(|cfg| {
        let out = run(&cfg)?;
        match &cfg.output {
            Some(path) => {
                std::fs::write(path, &out.text).map_err(|source| CliError::Io { path: path.clone(), source })?
            }
            None => print!("{}", out.text),
        }
        Ok(out.exit_code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(if code == 0 { EXIT_ERROR } else { code } as u8)
        }
    }
}
