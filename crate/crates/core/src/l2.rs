//! The L² Hermitian form on holomorphic 1-forms.
//!
//! # Normalization
//!
//! The pairing used throughout is
//!
//! ```text
//! <θ1, θ2> = (i/2) ∫_X θ1 ∧ conj(θ2)
//! ```
//!
//! With `θ = u dx` locally, `(i/2) dx ∧ dx̄` is the area element `dA`, so
//! `<θ, θ> = ∫ |u|^2 dA > 0`. The bare integral `∫ θ1 ∧ conj(θ2)` differs from
//! this by the constant `-2i`; every sign and vanishing statement downstream
//! is unchanged by a positive rescaling, and this choice makes the Gram
//! matrix positive definite.
//!
//! In coordinates, `G_jk = Σ_sheets ∬_C u_j conj(u_k) dA(x)` with `u` the
//! `x`-chart coefficients of the standard basis.

use num_complex::Complex64;
use serde::Serialize;

use crate::curve::CurveSpec;
use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::quadrature::{integrate_domain, Domain, QuadParams, QuadReport};

/// Gram matrix of the standard basis and its orthonormalizer.
#[derive(Clone, Debug)]
pub struct GramData {
    /// Hermitian positive-definite Gram matrix.
    pub g: CMatrix,
    /// Upper-triangular `T` with `T G T† = I`.
    pub t: CMatrix,
    pub report: QuadReport,
    pub min_eigenvalue: f64,
    pub condition: f64,
}

impl GramData {
    /// Builds Gram data from an already known matrix (no quadrature report).
    pub fn from_matrix(g: CMatrix) -> Result<Self> {
        let g = linalg::hermitian_part(&g);
        let t = orthonormalizer(&g)?;
        let eig = linalg::hermitian_eigenvalues(&g);
        let min_eigenvalue = eig[0];
        let condition = eig[eig.len() - 1] / eig[0];
        Ok(GramData {
            g,
            t,
            report: QuadReport {
                levels: 0,
                level_values: Vec::new(),
                rel_error: 0.0,
                cells: 0,
                evaluations: 0,
                far_radius: 0.0,
            },
            min_eigenvalue,
            condition,
        })
    }

    pub fn genus(&self) -> usize {
        self.g.nrows()
    }

    /// Applies the orthonormalizer to a raw coefficient vector.
    pub fn apply(&self, raw: &[Complex64]) -> Vec<Complex64> {
        let n = self.t.nrows();
        (0..n).map(|i| (i..n).map(|k| self.t[(i, k)] * raw[k]).sum()).collect()
    }

    /// Same data with `G` multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = GramData::from_matrix(&self.g * Complex64::new(c, 0.0))?;
        out.report = self.report.clone();
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GramSummary {
    pub genus: usize,
    /// Row-major `[re, im]` entries of `G`.
    pub g: Vec<Vec<[f64; 2]>>,
    pub t: Vec<Vec<[f64; 2]>>,
    pub min_eigenvalue: f64,
    pub condition: f64,
    pub quadrature: QuadReport,
}

impl GramData {
    pub fn summary(&self) -> GramSummary {
        let rows = |m: &CMatrix| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect()
        };
        GramSummary {
            genus: self.genus(),
            g: rows(&self.g),
            t: rows(&self.t),
            min_eigenvalue: self.min_eigenvalue,
            condition: self.condition,
            quadrature: self.report.clone(),
        }
    }
}

/// Upper-triangular `T` with `T G T† = I`.
pub fn orthonormalizer(g: &CMatrix) -> Result<CMatrix> {
    let u = linalg::upper_cholesky(g)?;
    Ok(linalg::invert_upper(&u))
}

/// Computes the Gram matrix of the standard basis by quadrature.
pub fn gram_matrix(spec: &CurveSpec, params: &QuadParams) -> Result<GramData> {
    let domain = Domain::new(spec, params)?;
    gram_matrix_on(spec, &domain, params)
}

/// As [`gram_matrix`], on an explicitly constructed domain.
pub fn gram_matrix_on(spec: &CurveSpec, domain: &Domain, params: &QuadParams) -> Result<GramData> {
    let g = spec.genus();
    let ncomp = 2 * g * g;
    let density = |jets: &[crate::curve::Jet]| {
        let mut out = vec![0.0; ncomp];
        let mut u = vec![Complex64::new(0.0, 0.0); g];
        for jet in jets {
            let inv = jet.py.inv();
            let (h, _, _) = spec.numerators(jet.x, jet.y);
            for k in 0..g {
                u[k] = h[k] * inv;
            }
            for j in 0..g {
                for k in 0..g {
                    let v = u[j] * u[k].conj();
                    out[2 * (j * g + k)] += v.re;
                    out[2 * (j * g + k) + 1] += v.im;
                }
            }
        }
        out
    };
    let (vals, report) = integrate_domain(spec, domain, params, ncomp, &density)?;
    let raw = CMatrix::from_fn(g, g, |j, k| Complex64::new(vals[2 * (j * g + k)], vals[2 * (j * g + k) + 1]));
    let mut data = GramData::from_matrix(raw)?;
    data.report = report;
    Ok(data)
}
