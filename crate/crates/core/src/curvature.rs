//! Degree one: the canonical map, the pulled-back metric and its curvature.
//!
//! With `u` the orthonormal-frame coefficient vector of the 1-forms in a chart
//! coordinate `z`, the pulled-back flat metric is `λ |dz|^2` with
//! `λ = ‖u‖²`, and its Gaussian curvature (curvature form = `Θ` times the
//! Kähler form) is
//!
//! ```text
//! Θ = -(2/λ) ∂∂̄ log λ = -2 (‖u‖²‖u'‖² - |<u', u>|²) / ‖u‖⁶ = -2 ‖u ∧ u'‖² / ‖u‖⁶ .
//! ```
//!
//! The numerator is evaluated through the Lagrange identity
//! `Σ_{j<k} |u_j u'_k - u_k u'_j|²`, which is nonnegative term by term, so
//! `Θ ≤ 0` holds exactly in floating point.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Chart, CurvePoint, CurveSpec, Jet};
use crate::error::{Error, Result};
use crate::l2::GramData;
use crate::linalg::{self, CMatrix};
use crate::quadrature::{integrate_plane, QuadParams, QuadReport};

type C = Complex64;

/// Orthonormal-frame coefficients at a point and their chart derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameVector {
    pub u: Vec<C>,
    pub du: Vec<C>,
    pub chart: Chart,
}

impl FrameVector {
    pub fn norm_sqr(&self) -> f64 {
        self.u.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Representative of `[u]` scaled so its largest-modulus entry is 1.
    pub fn projective(&self) -> Vec<C> {
        let pivot = *self.u.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("genus >= 1");
        self.u.iter().map(|z| z / pivot).collect()
    }

    /// `‖u ∧ u'‖²` by the Lagrange identity.
    pub fn wedge_norm_sqr(&self) -> f64 {
        wedge_norm_sqr(&self.u, &self.du)
    }

    pub fn theta(&self) -> f64 {
        theta(&self.u, &self.du)
    }

    /// `2 σ₁² σ₂² / ‖u‖⁶` from the singular values of the `2 × g` matrix with
    /// rows `u` and `u'`; vanishes exactly where `u'` is parallel to `u`, and
    /// equals `|Θ|` up to rounding.
    pub fn degeneracy(&self) -> f64 {
        let g = self.u.len();
        let m = CMatrix::from_fn(2, g, |r, k| if r == 0 { self.u[k] } else { self.du[k] });
        let s = linalg::singular_values(&m);
        let n2 = self.norm_sqr();
        let s2 = if s.len() > 1 { s[1] } else { 0.0 };
        2.0 * (s[0] * s2).powi(2) / (n2 * n2 * n2)
    }
}

fn wedge_norm_sqr(u: &[C], du: &[C]) -> f64 {
    let mut acc = 0.0;
    for j in 0..u.len() {
        for k in j + 1..u.len() {
            acc += (u[j] * du[k] - u[k] * du[j]).norm_sqr();
        }
    }
    acc
}

/// Gaussian curvature from a frame vector and its derivative.
pub fn theta(u: &[C], du: &[C]) -> f64 {
    let n2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    -2.0 * wedge_norm_sqr(u, du) / (n2 * n2 * n2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: CurvePoint,
    /// Metric density in the point's chart.
    pub lambda: f64,
    pub theta: f64,
    pub degeneracy: f64,
}

/// Frame vector `T u_raw` at `p` in `p`'s chart.
pub fn frame_at(spec: &CurveSpec, gram: &GramData, p: &CurvePoint) -> Result<FrameVector> {
    let raw = spec.standard_basis_eval(p)?;
    Ok(FrameVector { u: gram.apply(&raw.u), du: gram.apply(&raw.du), chart: p.chart })
}

/// Image of `p` under the canonical map, as a frame-vector representative.
pub fn canonical_map_point(spec: &CurveSpec, gram: &GramData, p: &CurvePoint) -> Result<FrameVector> {
    frame_at(spec, gram, p)
}

pub fn metric_density(spec: &CurveSpec, gram: &GramData, p: &CurvePoint) -> Result<f64> {
    Ok(frame_at(spec, gram, p)?.norm_sqr())
}

pub fn curvature_at(spec: &CurveSpec, gram: &GramData, p: &CurvePoint) -> Result<CurvatureSample> {
    let fv = frame_at(spec, gram, p)?;
    Ok(sample_from_frame(*p, &fv))
}

fn sample_from_frame(point: CurvePoint, fv: &FrameVector) -> CurvatureSample {
    CurvatureSample { point, lambda: fv.norm_sqr(), theta: fv.theta(), degeneracy: fv.degeneracy() }
}

/// Sampling layout for scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Points per side of the `x`-chart grid.
    pub n: usize,
    /// Grid rectangle = this factor times the bounding box of the critical
    /// values (at least the unit square around its centre).
    pub hull_factor: f64,
    /// Angular samples per ring of a `y`-chart disk.
    pub disk_angles: usize,
    /// Rings per `y`-chart disk.
    pub disk_rings: usize,
    /// Largest accepted `Θ`.
    pub tol_theta: f64,
    pub degeneracy_tol: f64,
    /// Cluster merge radius, as a fraction of the grid half-width.
    pub cluster_radius: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            n: 200,
            hull_factor: 1.5,
            disk_angles: 32,
            disk_rings: 8,
            tol_theta: 1e-9,
            degeneracy_tol: 1e-6,
            cluster_radius: 1e-3,
        }
    }
}

/// Centre and half-width of the scan rectangle.
pub fn grid_rectangle(spec: &CurveSpec, grid: &GridParams) -> (C, f64) {
    let xs: Vec<C> = spec.ramifications().iter().map(|r| r.x).collect();
    if xs.is_empty() {
        return (C::new(0.0, 0.0), grid.hull_factor);
    }
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for x in &xs {
        lo_re = lo_re.min(x.re);
        hi_re = hi_re.max(x.re);
        lo_im = lo_im.min(x.im);
        hi_im = hi_im.max(x.im);
    }
    let centre = C::new(0.5 * (lo_re + hi_re), 0.5 * (lo_im + hi_im));
    let half = (0.5 * (hi_re - lo_re)).max(0.5 * (hi_im - lo_im)).max(0.5) * grid.hull_factor;
    (centre, half)
}

/// `y`-chart disk radius around a ramification point of index `e`, chosen so
/// that the `x` values stay within a fraction of the distance to the nearest
/// other critical value.
fn disk_radius(spec: &CurveSpec, k: usize) -> f64 {
    let r = spec.ramifications()[k];
    let nearest = spec
        .ramifications()
        .iter()
        .filter(|o| (o.x - r.x).norm() > 1e-9 * (1.0 + r.x.norm()))
        .map(|o| (o.x - r.x).norm())
        .fold(f64::INFINITY, f64::min);
    let rho = if nearest.is_finite() { nearest / 3.0 } else { 0.5 };
    let (px, top) = spec.ramification_profile(k);
    0.5 * (rho * px.norm() / top.norm()).powf(1.0 / r.index as f64)
}

/// Points of the `y`-chart disk around ramification point `k`: the centre,
/// then `rings × angles` samples.
fn disk_points(spec: &CurveSpec, k: usize, grid: &GridParams) -> Vec<CurvePoint> {
    let r = spec.ramifications()[k];
    let radius = disk_radius(spec, k);
    let mut out = vec![CurvePoint { x: r.x, y: r.y, chart: Chart::Y }];
    for ring in 1..=grid.disk_rings {
        let rr = radius * ring as f64 / grid.disk_rings as f64;
        for a in 0..grid.disk_angles {
            let y = r.y + C::from_polar(rr, 2.0 * std::f64::consts::PI * a as f64 / grid.disk_angles as f64);
            if let Some(x) = spec.solve_x_near(k, y) {
                out.push(CurvePoint { x, y, chart: Chart::Y });
            }
        }
    }
    out
}

/// Scan points in deterministic order: the `x` grid row by row with sheets in
/// fibre order, then the `y`-chart disks.
pub fn scan_points(spec: &CurveSpec, grid: &GridParams) -> Vec<CurvePoint> {
    let (centre, half) = grid_rectangle(spec, grid);
    let n = grid.n.max(2);
    let step = 2.0 * half / (n - 1) as f64;
    let rows: Vec<Vec<CurvePoint>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let im = centre.im - half + step * i as f64;
            let mut row = Vec::new();
            for j in 0..n {
                let x = C::new(centre.re - half + step * j as f64, im);
                for y in spec.fiber(x) {
                    row.push(CurvePoint { x, y, chart: spec.best_chart(x, y) });
                }
            }
            row
        })
        .collect();
    let mut out: Vec<CurvePoint> = rows.into_iter().flatten().collect();
    for k in 0..spec.ramifications().len() {
        out.extend(disk_points(spec, k, grid));
    }
    out
}

/// Curvature on the scan grid. Every sample must have `θ ≤ tol_theta`;
/// callers check this with [`ScanSummary`].
pub fn scan_curvature(spec: &CurveSpec, gram: &GramData, grid: &GridParams) -> Result<Vec<CurvatureSample>> {
    scan_points(spec, grid).into_par_iter().map(|p| curvature_at(spec, gram, &p)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSummary {
    pub samples: usize,
    pub max_theta: f64,
    pub violations: usize,
    /// `-max θ` over samples farther than `far` from every ramification
    /// point (the reported strict-negativity margin δ).
    pub delta_far: f64,
    pub far: f64,
}

pub fn summarize_scan(spec: &CurveSpec, samples: &[CurvatureSample], tol_theta: f64, far: f64) -> ScanSummary {
    let max_theta = samples.iter().map(|s| s.theta).fold(f64::NEG_INFINITY, f64::max);
    let violations = samples.iter().filter(|s| s.theta > tol_theta).count();
    let mut far_max = f64::NEG_INFINITY;
    for s in samples {
        let Some((x, y)) = spec.affine(&s.point).ok().flatten() else { continue };
        let d = spec
            .ramifications()
            .iter()
            .map(|r| ((x - r.x).norm_sqr() + (y - r.y).norm_sqr()).sqrt())
            .fold(f64::INFINITY, f64::min);
        if d > far {
            far_max = far_max.max(s.theta);
        }
    }
    ScanSummary { samples: samples.len(), max_theta, violations, delta_far: -far_max, far }
}

/// A cluster of degenerate samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegenerateCluster {
    /// The member with the smallest degeneracy.
    pub point: CurvePoint,
    pub theta: f64,
    pub degeneracy: f64,
    pub members: usize,
}

/// Samples whose degeneracy falls below `degeneracy_tol`, merged into
/// clusters.
pub fn degenerate_clusters(spec: &CurveSpec, samples: &[CurvatureSample], grid: &GridParams) -> Vec<DegenerateCluster> {
    let (_, half) = grid_rectangle(spec, grid);
    let merge = grid.cluster_radius * half;
    let mut clusters: Vec<(C, C, DegenerateCluster)> = Vec::new();
    for s in samples.iter().filter(|s| s.degeneracy < grid.degeneracy_tol) {
        let Some((x, y)) = spec.affine(&s.point).ok().flatten() else { continue };
        let hit = clusters
            .iter_mut()
            .find(|(cx, cy, _)| ((x - *cx).norm_sqr() + (y - *cy).norm_sqr()).sqrt() <= merge);
        match hit {
            Some((_, _, c)) => {
                c.members += 1;
                if s.degeneracy < c.degeneracy {
                    c.point = s.point;
                    c.theta = s.theta;
                    c.degeneracy = s.degeneracy;
                }
            }
            None => clusters.push((
                x,
                y,
                DegenerateCluster { point: s.point, theta: s.theta, degeneracy: s.degeneracy, members: 1 },
            )),
        }
    }
    clusters.into_iter().map(|(_, _, c)| c).collect()
}

/// Points where `dρ` degenerates, one per cluster.
pub fn degenerate_points(spec: &CurveSpec, gram: &GramData, grid: &GridParams) -> Result<Vec<CurvePoint>> {
    let samples = scan_curvature(spec, gram, grid)?;
    Ok(degenerate_clusters(spec, &samples, grid).into_iter().map(|c| c.point).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussBonnet {
    pub total: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub quadrature: QuadReport,
}

/// `Θ λ_x` summed over the sheets above `x`, each sheet evaluated in its
/// better-conditioned chart.
fn curvature_density(spec: &CurveSpec, gram: &GramData, jets: &[Jet]) -> f64 {
    let mut acc = 0.0;
    for jet in jets {
        let (chart, scale) = if jet.py.norm() >= jet.px.norm() {
            (Chart::X, 1.0)
        } else {
            (Chart::Y, (jet.px / jet.py).norm_sqr())
        };
        let Ok(raw) = spec.eval_jet(jet, chart) else { continue };
        let u = gram.apply(&raw.u);
        let du = gram.apply(&raw.du);
        let n2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        acc += -2.0 * wedge_norm_sqr(&u, &du) / (n2 * n2) * scale;
    }
    acc
}

/// `∫_X Θ dA_λ`, to be compared with `2π (2 - 2g)`.
pub fn gauss_bonnet_total(spec: &CurveSpec, gram: &GramData, params: &QuadParams) -> Result<GaussBonnet> {
    let f = |jets: &[Jet]| vec![curvature_density(spec, gram, jets)];
    let (v, report) = integrate_plane(spec, params, 1, &f)?;
    let expected = 2.0 * std::f64::consts::PI * (2.0 - 2.0 * spec.genus() as f64);
    let total = v[0];
    Ok(GaussBonnet { total, expected, rel_error: ((total - expected) / expected).abs(), quadrature: report })
}

/// Rejects a sample set containing positive curvature.
pub fn check_nonpositive(samples: &[CurvatureSample], tol: f64) -> Result<()> {
    match samples.iter().find(|s| s.theta > tol) {
        Some(s) => Err(Error::InvalidInput(format!(
            "positive curvature {:e} at ({}, {})",
            s.theta, s.point.x, s.point.y
        ))),
        None => Ok(()),
    }
}
