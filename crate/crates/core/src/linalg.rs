//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Factorization `G = U U†` with `U` upper triangular and positive diagonal.
///
/// This is Cholesky run from the last index backwards; a pivot whose square
/// falls below `1e-15 · max G_ii` is reported as loss of definiteness.
pub fn upper_cholesky(g: &CMatrix) -> Result<CMatrix> {
    let n = g.nrows();
    if n != g.ncols() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", n, g.ncols())));
    }
    let scale = (0..n).map(|i| g[(i, i)].re.abs()).fold(0.0, f64::max);
    let mut u = CMatrix::zeros(n, n);
    for j in (0..n).rev() {
        let mut d = g[(j, j)].re;
        for k in j + 1..n {
            d -= u[(j, k)].norm_sqr();
        }
        if !(d > 1e-15 * scale) {
            return Err(Error::NotPositiveDefinite { pivot: d.max(0.0).sqrt(), index: j });
        }
        let pivot = d.sqrt();
        u[(j, j)] = Complex64::new(pivot, 0.0);
        for i in 0..j {
            let mut s = g[(i, j)];
            for k in j + 1..n {
                s -= u[(i, k)] * u[(j, k)].conj();
            }
            u[(i, j)] = s / pivot;
        }
    }
    Ok(u)
}

/// Inverse of an upper triangular matrix by back substitution.
pub fn invert_upper(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for i in (0..=col).rev() {
            let mut s = if i == col { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for k in i + 1..=col {
                s -= u[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / u[(i, i)];
        }
    }
    inv
}

/// Inverse of a Hermitian positive-definite matrix through its Cholesky
/// factor: `M^{-1} = U^{-†} U^{-1}`.
pub fn hpd_inverse(m: &CMatrix) -> Result<CMatrix> {
    let u = upper_cholesky(m)?;
    let ui = invert_upper(&u);
    Ok(hermitian_part(&(ui.adjoint() * &ui)))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = hermitian_part(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
