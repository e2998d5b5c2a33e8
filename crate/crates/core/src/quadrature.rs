//! Integration over the whole `x`-plane of sheet-summed densities that are
//! singular at the critical values of `x`.
//!
//! The plane is covered by a smooth partition of unity:
//!
//! * one polar patch per critical value `b`, radius a fraction of the distance
//!   to the nearest other critical value, parametrized by
//!   `x = b + s^e e^{iφ}` where `e` is the ramification index there. With this
//!   substitution the integrand is smooth in `(s, φ)`;
//! * a mid-field disk `|x| ≤ R` in polar coordinates about the origin,
//!   weighted by `1 - Σ χ_b`, which vanishes near every `b`;
//! * a far field `|x| > R`, mapped to the disk `|w| < 1/R` by `w = 1/x`.
//!
//! Each piece is integrated by tensor Gauss–Legendre rules on rectangular
//! cells, refined level by level where a lower-order rule disagrees. Cells are
//! evaluated in parallel; totals are folded in cell order with compensated
//! summation, so results do not depend on the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpec, Jet};
use crate::error::{Error, Result};

/// Density integrand: receives the jets of all sheets over a point `x` and
/// returns the sheet-summed density with respect to Lebesgue measure in `x`.
pub type Integrand<'a> = dyn Fn(&[Jet]) -> Vec<f64> + Sync + 'a;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Target relative accuracy (against the largest component).
    pub target_rel: f64,
    /// Maximum number of refinement levels.
    pub max_level: usize,
    /// Radius separating mid and far field; derived from the critical values
    /// when unset.
    pub far_radius: Option<f64>,
    /// Gauss–Legendre points per cell dimension.
    pub order: usize,
    /// Patch radius as a fraction of the distance to the nearest other
    /// critical value. Must be below 1.
    pub patch_fraction: f64,
    /// Angular offset of the mid- and far-field polar grids.
    pub angle_offset: f64,
    /// Cap on the number of leaf cells.
    pub max_cells: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            target_rel: 1e-7,
            max_level: 30,
            far_radius: None,
            order: 10,
            patch_fraction: 1.0 / 3.0,
            angle_offset: 0.0,
            max_cells: 400_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadReport {
    pub levels: usize,
    /// Integral estimate after each level.
    pub level_values: Vec<Vec<f64>>,
    pub rel_error: f64,
    pub cells: usize,
    pub evaluations: usize,
    pub far_radius: f64,
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Cutoff equal to 1 on `r ≤ ρ/2`, 0 on `r ≥ ρ`, smooth in between.
pub fn cutoff(r: f64, rho: f64) -> f64 {
    smooth_step((rho - r) / (0.5 * rho))
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Patch { ram: usize, index: usize, radius: f64 },
    Mid { radius: f64 },
    Far { radius: f64 },
}

/// Partition of the plane into patches, mid field and far field.
#[derive(Clone, Debug)]
pub struct Domain {
    pieces: Vec<Piece>,
    centres: Vec<(Complex64, f64)>,
    far_radius: f64,
    angle_offset: f64,
}

impl Domain {
    pub fn new(spec: &CurveSpec, params: &QuadParams) -> Result<Self> {
        if !(params.patch_fraction > 0.0 && params.patch_fraction < 1.0) {
            return Err(Error::InvalidInput("patch_fraction must lie in (0, 1)".into()));
        }
        let crit = spec.critical_values();
        let mut pieces = Vec::new();
        let mut centres = Vec::new();
        let mut reach: f64 = 0.0;
        for (i, &(b, index, ram)) in crit.iter().enumerate() {
            let nearest = crit
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (o, _, _))| (b - o).norm())
                .fold(f64::INFINITY, f64::min);
            let nearest = if nearest.is_finite() { nearest } else { 1.0 + b.norm() };
            let radius = params.patch_fraction * nearest;
            if radius < 1e-6 * (1.0 + b.norm()) {
                return Err(Error::SingularitySaturation { radius });
            }
            reach = reach.max(b.norm() + radius);
            pieces.push(Piece::Patch { ram, index, radius });
            centres.push((b, radius));
        }
        let far_radius = match params.far_radius {
            Some(r) => {
                if !(r > reach) {
                    return Err(Error::InvalidInput(format!(
                        "far radius {r} must exceed the patch reach {reach}"
                    )));
                }
                r
            }
            None => (2.0 * reach).max(1.0),
        };
        pieces.push(Piece::Mid { radius: far_radius });
        pieces.push(Piece::Far { radius: far_radius });
        Ok(Domain { pieces, centres, far_radius, angle_offset: params.angle_offset })
    }

    pub fn far_radius(&self) -> f64 {
        self.far_radius
    }

    /// Reorders the branch-point patches (for consistency checks).
    pub fn permute_patches(&mut self, perm: &[usize]) {
        let n = self.centres.len();
        assert_eq!(perm.len(), n);
        let patches: Vec<Piece> = perm.iter().map(|&i| self.pieces[i]).collect();
        let centres: Vec<_> = perm.iter().map(|&i| self.centres[i]).collect();
        self.pieces.splice(0..n, patches);
        self.centres = centres;
    }

    fn initial_cells(&self) -> Vec<(usize, [f64; 4])> {
        let mut out = Vec::new();
        let off = self.angle_offset;
        for (k, piece) in self.pieces.iter().enumerate() {
            let (p_hi, np, nq) = match *piece {
                Piece::Patch { index, radius, .. } => (radius.powf(1.0 / index as f64), 2, 4),
                Piece::Mid { radius } => (radius, 8, 16),
                Piece::Far { radius } => (1.0 / radius, 2, 4),
            };
            let q0 = if matches!(piece, Piece::Patch { .. }) { 0.0 } else { off };
            for i in 0..np {
                for j in 0..nq {
                    let a0 = p_hi * i as f64 / np as f64;
                    let a1 = p_hi * (i + 1) as f64 / np as f64;
                    let b0 = q0 + 2.0 * PI * j as f64 / nq as f64;
                    let b1 = q0 + 2.0 * PI * (j + 1) as f64 / nq as f64;
                    out.push((k, [a0, a1, b0, b1]));
                }
            }
        }
        out
    }

    /// Weighted density at parameter point `(p, q)` of piece `k`, or `None`
    /// where the partition weight vanishes.
    fn sample(&self, spec: &CurveSpec, k: usize, p: f64, q: f64, f: &Integrand) -> Option<Vec<f64>> {
        match self.pieces[k] {
            Piece::Patch { ram, index, radius, .. } => {
                let r = p.powi(index as i32);
                let chi = cutoff(r, radius);
                if chi == 0.0 {
                    return None;
                }
                let z = Complex64::from_polar(r, q);
                let w = chi * index as f64 * p.powi(2 * index as i32 - 1);
                let jets = spec.fiber_jets_local(ram, z);
                Some(f(&jets).into_iter().map(|v| v * w).collect())
            }
            Piece::Mid { .. } => {
                let x = Complex64::from_polar(p, q);
                let mut weight = 1.0;
                for &(b, rho) in &self.centres {
                    weight -= cutoff((x - b).norm(), rho);
                }
                if weight == 0.0 {
                    return None;
                }
                let jets = spec.fiber_jets(x);
                Some(f(&jets).into_iter().map(|v| v * weight * p).collect())
            }
            Piece::Far { .. } => {
                let x = Complex64::from_polar(1.0 / p, -q);
                let jets = spec.fiber_jets(x);
                let w = p.powi(-3);
                Some(f(&jets).into_iter().map(|v| v * w).collect())
            }
        }
    }
}

struct Rule {
    hi: (Vec<f64>, Vec<f64>),
    lo: (Vec<f64>, Vec<f64>),
}

#[derive(Clone)]
struct Cell {
    piece: usize,
    rect: [f64; 4],
    value: Vec<f64>,
    err: f64,
}

fn tensor(
    domain: &Domain,
    spec: &CurveSpec,
    piece: usize,
    rect: [f64; 4],
    rule: &(Vec<f64>, Vec<f64>),
    ncomp: usize,
    f: &Integrand,
) -> Vec<f64> {
    let [a0, a1, b0, b1] = rect;
    let (ha, ma) = (0.5 * (a1 - a0), 0.5 * (a1 + a0));
    let (hb, mb) = (0.5 * (b1 - b0), 0.5 * (b1 + b0));
    let mut acc = vec![CompensatedSum::default(); ncomp];
    for (xi, wi) in rule.0.iter().zip(&rule.1) {
        let p = ma + ha * xi;
        for (xj, wj) in rule.0.iter().zip(&rule.1) {
            let q = mb + hb * xj;
            if let Some(v) = domain.sample(spec, piece, p, q, f) {
                let w = wi * wj * ha * hb;
                for (a, v) in acc.iter_mut().zip(v) {
                    a.add(v * w);
                }
            }
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

fn eval_cell(
    domain: &Domain,
    spec: &CurveSpec,
    rule: &Rule,
    piece: usize,
    rect: [f64; 4],
    ncomp: usize,
    f: &Integrand,
) -> Cell {
    let value = tensor(domain, spec, piece, rect, &rule.hi, ncomp, f);
    let lo = tensor(domain, spec, piece, rect, &rule.lo, ncomp, f);
    let err = value
        .iter()
        .zip(&lo)
        .map(|(a, b)| if (a - b).is_nan() { f64::INFINITY } else { (a - b).abs() })
        .fold(0.0, f64::max);
    Cell { piece, rect, value, err }
}

fn total(cells: &[Cell], ncomp: usize) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::default(); ncomp];
    for c in cells {
        for (a, v) in acc.iter_mut().zip(&c.value) {
            a.add(*v);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Integrates `f` over the `x`-plane; `ncomp` is the length of the vectors
/// `f` returns.
pub fn integrate_plane(
    spec: &CurveSpec,
    params: &QuadParams,
    ncomp: usize,
    f: &Integrand,
) -> Result<(Vec<f64>, QuadReport)> {
    let domain = Domain::new(spec, params)?;
    integrate_domain(spec, &domain, params, ncomp, f)
}

pub fn integrate_domain(
    spec: &CurveSpec,
    domain: &Domain,
    params: &QuadParams,
    ncomp: usize,
    f: &Integrand,
) -> Result<(Vec<f64>, QuadReport)> {
    let n = params.order.max(2);
    let rule = Rule { hi: gauss_legendre(n), lo: gauss_legendre((n * 3 / 5).max(1)) };
    let per_cell = n * n + rule.lo.0.len() * rule.lo.0.len();

    let mut cells: Vec<Cell> = domain
        .initial_cells()
        .into_par_iter()
        .map(|(k, rect)| eval_cell(domain, spec, &rule, k, rect, ncomp, f))
        .collect();
    let mut evaluations = cells.len() * per_cell;

    let mut level_values = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut level = 0;
    loop {
        let cur = total(&cells, ncomp);
        let scale = max_abs(&cur);
        let err_sum: f64 = cells.iter().map(|c| c.err).sum();
        let step = match &prev {
            Some(p) => max_abs(&cur.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>()),
            None => err_sum,
        };
        level_values.push(cur.clone());
        let goal = params.target_rel * scale;
        let rel_error = if scale > 0.0 { err_sum.max(step) / scale } else { f64::INFINITY };
        let report = |levels: usize| QuadReport {
            levels,
            level_values: level_values.clone(),
            rel_error,
            cells: cells.len(),
            evaluations,
            far_radius: domain.far_radius(),
        };
        if !cur.iter().all(|v| v.is_finite()) {
            return Err(Error::NoConvergence { estimate: format!("{cur:?}"), rel_error: f64::INFINITY });
        }
        if err_sum <= goal && step <= goal {
            return Ok((cur, report(level)));
        }
        if level >= params.max_level || cells.len() * 4 > params.max_cells {
            return Err(Error::NoConvergence { estimate: format!("{cur:?}"), rel_error });
        }

        // Split the largest-error cells until what remains is well under goal.
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| cells[b].err.total_cmp(&cells[a].err).then(a.cmp(&b)));
        let mut remaining = err_sum;
        let mut split = vec![false; cells.len()];
        for &i in &order {
            if remaining <= 0.25 * goal {
                break;
            }
            split[i] = true;
            remaining -= cells[i].err;
        }
        let jobs: Vec<(usize, [f64; 4])> = cells
            .iter()
            .zip(&split)
            .filter(|(_, s)| **s)
            .flat_map(|(c, _)| {
                let [a0, a1, b0, b1] = c.rect;
                let (am, bm) = (0.5 * (a0 + a1), 0.5 * (b0 + b1));
                [[a0, am, b0, bm], [a0, am, bm, b1], [am, a1, b0, bm], [am, a1, bm, b1]]
                    .into_iter()
                    .map(move |r| (c.piece, r))
            })
            .collect();
        evaluations += jobs.len() * per_cell;
        let mut children = jobs
            .into_par_iter()
            .map(|(k, rect)| eval_cell(domain, spec, &rule, k, rect, ncomp, f))
            .collect::<Vec<_>>()
            .into_iter();
        let mut next = Vec::with_capacity(cells.len() + 3 * split.iter().filter(|s| **s).count());
        for (c, s) in cells.into_iter().zip(split) {
            if s {
                next.extend(children.by_ref().take(4));
            } else {
                next.push(c);
            }
        }
        cells = next;
        prev = Some(cur);
        level += 1;
    }
}
