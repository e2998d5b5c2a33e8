//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use curvcanon::curvature::{curvature_at, gauss_bonnet_total};
use curvcanon::quadrature::QuadParams;
use curvcanon::symprod::{self, check_divisor, random_divisors, RANK_TOL};
use curvcanon::{gram_matrix, Chart, CurveKind, CurveSpec, Error, GramData};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const X6: &str = r#"{"kind": "hyperelliptic", "coeffs": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}"#;
const X8: &str =
    r#"{"kind": "hyperelliptic", "coeffs": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}"#;
const FERMAT: &str = r#"{"kind": "plane_quartic", "coeffs": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}"#;

struct Ctx {
    results: Vec<(String, bool)>,
}

impl Ctx {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn curvcanon(args: &[&str]) -> (Option<i32>, String, Duration) {
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_curvcanon")).args(args).output().unwrap();
    (o.status.code(), String::from_utf8(o.stdout).unwrap(), t.elapsed())
}

struct ScanStats {
    rows: usize,
    max_theta: f64,
    exit: Option<i32>,
    elapsed: Duration,
}

fn scan(curve: &Path) -> ScanStats {
    let (exit, text, elapsed) = curvcanon(&["scan", "--curve", curve.to_str().unwrap(), "--format", "csv"]);
    let mut rows = 0;
    let mut max_theta = f64::NEG_INFINITY;
    for l in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let theta: f64 = l.split(',').nth(6).unwrap().parse().unwrap();
        max_theta = max_theta.max(theta);
        rows += 1;
    }
    ScanStats { rows, max_theta, exit, elapsed }
}

fn weierstrass(curve: &Path) -> (Option<i32>, serde_json::Value) {
    let (exit, text, _) = curvcanon(&["weierstrass", "--curve", curve.to_str().unwrap(), "--format", "json"]);
    (exit, serde_json::from_str(&text).unwrap())
}

fn cplx(v: &serde_json::Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn nonpositivity(ctx: &mut Ctx, files: &[(&str, std::path::PathBuf)]) {
    for (name, path) in files {
        let s = scan(path);
        let pass = s.exit == Some(0) && s.rows >= 40_000 && s.max_theta <= 1e-9 && s.elapsed < Duration::from_secs(60);
        ctx.record(
            &format!("1 nonpositivity [{name}]"),
            pass,
            format!("{} samples, max theta {:e}, {:.1?}", s.rows, s.max_theta, s.elapsed),
        );
    }
}

fn hyperelliptic_vanishing(ctx: &mut Ctx, x6: &Path) {
    let (exit, v) = weierstrass(x6);
    let clusters = v["result"]["clusters"].as_array().unwrap();
    let roots: Vec<Complex64> = (0..6).map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / 3.0)).collect();
    let mut worst_dist: f64 = 0.0;
    let mut worst_theta: f64 = 0.0;
    let mut hit = [false; 6];
    for c in clusters {
        let x = cplx(&c["point"]["x"]);
        let y = cplx(&c["point"]["y"]);
        let (k, d) = roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, ((x - r).norm_sqr() + y.norm_sqr()).sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        hit[k] = true;
        worst_dist = worst_dist.max(d);
        worst_theta = worst_theta.max(c["theta"].as_f64().unwrap().abs());
    }
    let far_max = -v["result"]["summary"]["delta_far"].as_f64().unwrap();
    let delta = -far_max / 2.0;
    let pass = exit == Some(0)
        && clusters.len() == 6
        && hit.iter().all(|h| *h)
        && worst_dist < 1e-3
        && worst_theta < 1e-6
        && delta > 0.0
        && far_max < -delta;
    ctx.record(
        "2 hyperelliptic vanishing [x^6-1]",
        pass,
        format!(
            "{} clusters, max distance to a root of unity {:e}, max |theta| at centres {:e}, delta {:e} (max theta beyond 0.2: {:e})",
            clusters.len(),
            worst_dist,
            worst_theta,
            delta,
            far_max
        ),
    );
}

fn quartic_strictness(ctx: &mut Ctx, fermat: &Path) {
    let (exit, v) = weierstrass(fermat);
    let clusters = v["result"]["clusters"].as_array().unwrap().len();
    let max_theta = v["result"]["summary"]["max_theta"].as_f64().unwrap();
    let samples = v["result"]["summary"]["samples"].as_u64().unwrap();
    let delta = -max_theta / 2.0;
    let pass = exit == Some(0) && clusters == 0 && delta > 0.0 && max_theta < -delta;
    ctx.record(
        "3 quartic strictness [x^4+y^4=1]",
        pass,
        format!("{samples} samples, max theta {max_theta:e}, delta {delta:e}, {clusters} degenerate clusters"),
    );
}

fn agreement(ctx: &mut Ctx, spec: &CurveSpec) {
    let t = Instant::now();
    let gram = gram_matrix(spec, &QuadParams::default()).unwrap();
    let d2 = symprod::metric_agreement_check(spec, &gram, 2, 100, 2024, symprod::AGREEMENT_TOL);
    let d1 = symprod::metric_agreement_check(spec, &gram, 1, 100, 2025, 1e-12);
    let elapsed = t.elapsed();
    let detail = match (&d2, &d1) {
        (Ok(a), Ok(b)) => format!(
            "d=2 max deviation {:e} (min sigma_2 {:e}), d=1 max deviation {:e}, {:.1?}",
            a.max_rel_dev, a.min_sigma_d, b.max_rel_dev, elapsed
        ),
        _ => format!("d=2: {:?}, d=1: {:?}", d2.as_ref().err(), d1.as_ref().err()),
    };
    let pass = matches!((&d2, &d1), (Ok(a), Ok(b)) if a.max_rel_dev < 1e-8 && b.max_rel_dev < 1e-12)
        && elapsed < Duration::from_secs(30);
    ctx.record("4 metric agreement [x^4+y^4=1]", pass, detail);
}

fn rank(ctx: &mut Ctx, fermat: &CurveSpec, gram: &GramData, hyper: &CurveSpec) {
    let divisors = random_divisors(fermat, 2, 1000, 77).unwrap();
    let mut min_ratio = f64::INFINITY;
    let mut min_sigma = f64::INFINITY;
    let mut ok = true;
    for div in &divisors {
        match check_divisor(fermat, gram, div) {
            Ok(c) => {
                min_ratio = min_ratio.min(c.sigma[1] / c.sigma[0]);
                min_sigma = min_sigma.min(c.sigma[1]);
            }
            Err(_) => ok = false,
        }
    }
    let gate = random_divisors(hyper, 2, 1, 0);
    let gated = matches!(gate, Err(Error::GateFailed { d: 2, gonality: 2 }));
    let pass = ok && min_ratio > RANK_TOL && gated;
    ctx.record(
        "5 differential rank",
        pass,
        format!(
            "1000 divisors on x^4+y^4=1: min sigma_2 {min_sigma:e}, min sigma_2/sigma_1 {min_ratio:e} (tol {RANK_TOL:e}); x^6-1 with d=2: {}",
            if gated { "rejected by gonality gate" } else { "NOT rejected" }
        ),
    );
}

fn gauss_bonnet(ctx: &mut Ctx, name: &str, spec: &CurveSpec) {
    let t = Instant::now();
    let params = QuadParams::default();
    let gram = gram_matrix(spec, &params).unwrap();
    let gb = gauss_bonnet_total(spec, &gram, &params).unwrap();
    let elapsed = t.elapsed();
    let pass = gb.rel_error < 0.01 && elapsed < Duration::from_secs(120);
    ctx.record(
        &format!("6 Gauss-Bonnet [{name}, g={}]", spec.genus()),
        pass,
        format!("total {:.9} vs {:.9} (rel error {:e}), {:.1?}", gb.total, gb.expected, gb.rel_error, elapsed),
    );
}

fn random_points(spec: &CurveSpec, count: usize, seed: u64, margin: f64) -> Vec<(Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let x = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        if spec.ramifications().iter().any(|r| (r.x - x).norm() < margin) {
            continue;
        }
        let fib = spec.fiber(x);
        out.push((x, fib[rng.random_range(0..fib.len())]));
    }
    out
}

fn oracles(ctx: &mut Ctx, curves: &[(&str, &CurveSpec, &GramData)]) {
    for (k, (name, spec, gram)) in curves.iter().enumerate() {
        let model = match spec.kind() {
            CurveKind::Hyperelliptic => Model::hyper(spec.coeffs().to_vec()),
            CurveKind::PlaneQuartic => Model::Quartic { f: spec.coeffs().to_vec() },
        };
        let mut worst: f64 = 0.0;
        for (x, y) in random_points(spec, 50, 100 + k as u64, 0.15) {
            let p = spec.point(x, y, Chart::X).unwrap();
            let theta = curvature_at(spec, gram, &p).unwrap().theta;
            let fd = fd_theta(&model, &gram.t, x, y, 1e-4);
            worst = worst.max((fd - theta).abs() / theta.abs());
        }
        ctx.record(&format!("7a curvature oracle [{name}]"), worst < 1e-4, format!("50 points, max relative difference {worst:e}"));
    }
    for (name, spec, gram) in curves {
        if spec.kind() == CurveKind::Hyperelliptic {
            let n = spec.coeffs().len() - 1;
            let mut worst: f64 = 0.0;
            for k in 0..spec.genus() {
                let o = hyperelliptic_gram_diagonal(n, k + 1);
                worst = worst.max((gram.g[(k, k)].re - o).abs() / o);
            }
            ctx.record(&format!("7b Gram oracle [{name}]"), worst < 1e-5, format!("max relative difference of diagonal {worst:e}"));
        }
        let g = spec.genus();
        let diag = (0..g).map(|k| gram.g[(k, k)].re).fold(0.0, f64::max);
        let mut off: f64 = 0.0;
        for j in 0..g {
            for k in 0..g {
                if j != k {
                    off = off.max(gram.g[(j, k)].norm());
                }
            }
        }
        ctx.record(&format!("7c Gram symmetry [{name}]"), off < 1e-6 * diag, format!("max off-diagonal / diagonal {:e}", off / diag));
    }
}

fn chart_invariance(ctx: &mut Ctx, name: &str, spec: &CurveSpec, gram: &GramData, seed: u64) {
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for (x, y) in random_points(spec, 100, seed, 0.05) {
        let p = spec.point(x, y, Chart::X).unwrap();
        let q = spec.to_chart(&p, Chart::Y).unwrap();
        let a = curvature_at(spec, gram, &p).unwrap().theta;
        let b = curvature_at(spec, gram, &q).unwrap().theta;
        worst = worst.max((a - b).abs() / a.abs());
        tested += 1;
    }
    ctx.record(&format!("8 chart invariance [{name}]"), tested == 100 && worst < 1e-9, format!("{tested} points, max relative difference {worst:e}"));
}

fn main() -> ExitCode {
    let mut ctx = Ctx { results: Vec::new() };
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<(&str, std::path::PathBuf)> = [("x^6-1", X6), ("x^8-1", X8), ("x^4+y^4=1", FERMAT)]
        .into_iter()
        .map(|(name, text)| {
            let p = dir.path().join(format!("{}.json", name.replace(['^', '+', '='], "_")));
            std::fs::write(&p, text).unwrap();
            (name, p)
        })
        .collect();

    nonpositivity(&mut ctx, &files);
    hyperelliptic_vanishing(&mut ctx, &files[0].1);
    quartic_strictness(&mut ctx, &files[2].1);

    let (x6, x8, fermat) = (x_pow_minus_one(6), x_pow_minus_one(8), fermat_quartic());
    let params = QuadParams::default();
    let (g6, g8, gf) = (
        gram_matrix(&x6, &params).unwrap(),
        gram_matrix(&x8, &params).unwrap(),
        gram_matrix(&fermat, &params).unwrap(),
    );
    agreement(&mut ctx, &fermat);
    rank(&mut ctx, &fermat, &gf, &x6);
    gauss_bonnet(&mut ctx, "x^6-1", &x6);
    gauss_bonnet(&mut ctx, "x^8-1", &x8);
    oracles(&mut ctx, &[("x^6-1", &x6, &g6), ("x^8-1", &x8, &g8), ("x^4+y^4=1", &fermat, &gf)]);
    chart_invariance(&mut ctx, "x^6-1", &x6, &g6, 31);
    chart_invariance(&mut ctx, "x^8-1", &x8, &g8, 32);

    let failed = ctx.results.iter().filter(|r| !r.1).count();
    println!("acceptance: {} passed, {failed} failed", ctx.results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
