//! Reduced divisors of degree `d ≥ 1`: the evaluation matrix, the cotangent
//! metric induced by the Abel–Jacobi pull-back, and the quotient metric on the
//! evaluation space.
//!
//! Frame convention: for points `p_1..p_d` with chart coordinates `z_i`, both
//! metrics are expressed in the frame `e_1..e_d` where `e_i` is the
//! evaluation covector at `p_i` (the cotangent frame dual to `∂/∂z_i`). Entry
//! `(i, j)` is `<e_i, e_j>`, linear in the first slot. With this convention
//! `d = 1` gives `1/λ` on both sides and orthonormal columns give the identity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{grid_rectangle, GridParams};
use crate::curve::{CurvePoint, CurveSpec};
use crate::error::{Error, Result};
use crate::l2::GramData;
use crate::linalg::{self, CMatrix};

type C = Complex64;

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Largest accepted relative deviation between the two metrics for `d ≥ 2`.
pub const AGREEMENT_TOL: f64 = 1e-8;

/// `d` distinct points on the curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorConfig {
    pub points: Vec<CurvePoint>,
}

impl DivisorConfig {
    /// Checks the points and the gonality bound.
    pub fn new(spec: &CurveSpec, points: Vec<CurvePoint>) -> Result<Self> {
        let d = points.len();
        if d == 0 {
            return Err(Error::InvalidInput("divisor has no points".into()));
        }
        let gate = spec.gonality_gate(d);
        if !gate.pass {
            return Err(Error::GateFailed { d, gonality: spec.gonality_lower() });
        }
        let aff: Vec<(C, C)> = points
            .iter()
            .map(|p| spec.affine(p)?.ok_or(Error::InvalidInput("divisor points must be affine".into())))
            .collect::<Result<_>>()?;
        let tol = spec.tolerances().root_separation;
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (aff[i], aff[j]);
                let sep = ((a.0 - b.0).norm_sqr() + (a.1 - b.1).norm_sqr()).sqrt();
                let scale = 1f64.max(a.0.norm()).max(a.1.norm());
                if sep <= tol * scale {
                    return Err(Error::PointsNotDistinct { separation: sep });
                }
            }
        }
        Ok(DivisorConfig { points })
    }

    pub fn d(&self) -> usize {
        self.points.len()
    }
}

/// `A[k][i] = u_k(p_i)` in the orthonormal frame, with its singular values.
#[derive(Clone, Debug)]
pub struct EvaluationMatrix {
    pub a: CMatrix,
    /// Descending.
    pub sigma: Vec<f64>,
}

impl EvaluationMatrix {
    pub fn sigma_min(&self) -> f64 {
        *self.sigma.last().unwrap()
    }

    /// Wraps a matrix, rejecting it when `σ_d ≤ RANK_TOL · σ_1`.
    pub fn from_matrix(a: CMatrix) -> Result<Self> {
        if a.ncols() > a.nrows() {
            return Err(Error::RankDeficient { sigma_min: 0.0, tol: 0.0 });
        }
        let sigma = linalg::singular_values(&a);
        let tol = RANK_TOL * sigma[0];
        let smin = *sigma.last().unwrap();
        if !(smin > tol) {
            return Err(Error::RankDeficient { sigma_min: smin, tol });
        }
        Ok(EvaluationMatrix { a, sigma })
    }
}

pub fn evaluation_matrix(spec: &CurveSpec, gram: &GramData, divisor: &DivisorConfig) -> Result<EvaluationMatrix> {
    let g = spec.genus();
    let mut a = CMatrix::zeros(g, divisor.d());
    for (i, p) in divisor.points.iter().enumerate() {
        let u = gram.apply(&spec.standard_basis_eval(p)?.u);
        for k in 0..g {
            a[(k, i)] = u[k];
        }
    }
    EvaluationMatrix::from_matrix(a)
}

/// `(A†A)^{-1}`: the metric dual to the pulled-back tangent metric `A†A`.
pub fn phi_cotangent_metric(a: &EvaluationMatrix) -> Result<CMatrix> {
    let gram = a.a.adjoint() * &a.a;
    linalg::hpd_inverse(&gram).map_err(|_| Error::RankDeficient { sigma_min: a.sigma_min(), tol: RANK_TOL * a.sigma[0] })
}

/// Quotient metric on `C^g / ker(A^T)` transported to `C^d` by evaluation.
///
/// The kernel of the evaluation map `c ↦ A^T c` is read off a full SVD; each
/// `e_i` is lifted to the orthogonal complement of the kernel (its least-norm
/// lift) and the Gram matrix of the lifts is returned.
pub fn grassmann_quotient_metric(a: &EvaluationMatrix) -> Result<CMatrix> {
    let (g, d) = (a.a.nrows(), a.a.ncols());
    let mut b = CMatrix::zeros(g, g);
    b.view_mut((0, 0), (d, g)).copy_from(&a.a.transpose());
    let svd = b.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let w = CMatrix::from_fn(g, d, |k, i| vt[(order[i], k)].conj());
    let kernel = CMatrix::from_fn(g, g - d, |k, i| vt[(order[d + i], k)].conj());
    let tol = RANK_TOL * a.sigma[0];
    let leak = linalg::frobenius(&(a.a.transpose() * &kernel));
    if leak > 1e3 * f64::EPSILON * a.sigma[0] * (g as f64) {
        return Err(Error::RankDeficient { sigma_min: a.sigma_min(), tol });
    }
    let restricted = a.a.transpose() * &w;
    let inv = restricted.try_inverse().ok_or(Error::RankDeficient { sigma_min: a.sigma_min(), tol })?;
    let lifts = &w * inv;
    Ok(linalg::hermitian_part(&(lifts.transpose() * lifts.map(|z| z.conj()))))
}

/// Outcome of comparing the two metrics on one divisor.
#[derive(Clone, Debug, Serialize)]
pub struct DivisorCheck {
    pub divisor: DivisorConfig,
    pub rel_dev: f64,
    pub sigma: Vec<f64>,
    /// Eigenvalues of the cotangent metric, ascending.
    pub spectrum: Vec<f64>,
}

pub fn check_divisor(spec: &CurveSpec, gram: &GramData, divisor: &DivisorConfig) -> Result<DivisorCheck> {
    let a = evaluation_matrix(spec, gram, divisor)?;
    let mphi = phi_cotangent_metric(&a)?;
    let mrho = grassmann_quotient_metric(&a)?;
    let rel_dev = linalg::frobenius(&(&mphi - &mrho)) / linalg::frobenius(&mphi);
    Ok(DivisorCheck {
        divisor: divisor.clone(),
        rel_dev,
        sigma: a.sigma.clone(),
        spectrum: linalg::hermitian_eigenvalues(&mphi),
    })
}

/// Seeded random divisors of degree `d`, uniform in the scan rectangle with a
/// uniformly chosen sheet; invalid or too-close samples are redrawn.
pub fn random_divisors(spec: &CurveSpec, d: usize, count: usize, seed: u64) -> Result<Vec<DivisorConfig>> {
    let gate = spec.gonality_gate(d);
    if !gate.pass {
        return Err(Error::GateFailed { d, gonality: spec.gonality_lower() });
    }
    let (centre, half) = grid_rectangle(spec, &GridParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pts = Vec::with_capacity(d);
        let mut attempts = 0;
        while pts.len() < d {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidInput("could not sample a valid divisor".into()));
            }
            let x = centre + C::new(rng.random_range(-half..half), rng.random_range(-half..half));
            let fib = spec.fiber(x);
            let y = fib[rng.random_range(0..fib.len())];
            let chart = spec.best_chart(x, y);
            if let Ok(p) = spec.point(x, y, chart) {
                pts.push(p);
            }
        }
        if let Ok(div) = DivisorConfig::new(spec, pts) {
            out.push(div);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub d: usize,
    pub trials: usize,
    pub max_rel_dev: f64,
    pub min_sigma_d: f64,
    /// Divisors whose deviation reached the agreement tolerance.
    pub failures: Vec<DivisorCheck>,
    /// Per trial, in trial order.
    pub rel_devs: Vec<f64>,
    pub sigma_d: Vec<f64>,
    pub spectra: Vec<Vec<f64>>,
}

/// Compares the two metrics on `trials` seeded random divisors.
///
/// Returns [`Error::AgreementFailed`] for the first (in trial order) divisor
/// whose relative deviation is at least `tol`.
pub fn metric_agreement_check(spec: &CurveSpec, gram: &GramData, d: usize, trials: usize, seed: u64, tol: f64) -> Result<Report> {
    let report = agreement_report(spec, gram, d, trials, seed, tol)?;
    if let Some(f) = report.failures.first() {
        return Err(Error::AgreementFailed {
            deviation: f.rel_dev,
            divisor: serde_json::to_string(&f.divisor).unwrap_or_default(),
        });
    }
    Ok(report)
}

/// As [`metric_agreement_check`] but returning failures inside the report.
pub fn agreement_report(spec: &CurveSpec, gram: &GramData, d: usize, trials: usize, seed: u64, tol: f64) -> Result<Report> {
    let divisors = random_divisors(spec, d, trials, seed)?;
    let checks: Vec<DivisorCheck> =
        divisors.par_iter().map(|div| check_divisor(spec, gram, div)).collect::<Result<_>>()?;
    let max_rel_dev = checks.iter().map(|c| c.rel_dev).fold(0.0, f64::max);
    let min_sigma_d = checks.iter().map(|c| *c.sigma.last().unwrap()).fold(f64::INFINITY, f64::min);
    Ok(Report {
        d,
        trials,
        max_rel_dev,
        min_sigma_d,
        failures: checks.iter().filter(|c| !(c.rel_dev < tol)).cloned().collect(),
        rel_devs: checks.iter().map(|c| c.rel_dev).collect(),
        sigma_d: checks.iter().map(|c| *c.sigma.last().unwrap()).collect(),
        spectra: checks.into_iter().map(|c| c.spectrum).collect(),
    })
}
