//! Dense complex polynomials in one and two variables.
//!
//! Coefficients are stored in ascending order of degree. The bivariate type
//! is only as general as the curves need: total degree at most four.

use num_complex::Complex64;

const MAX_ABERTH_ITERS: usize = 500;

/// Univariate polynomial `c[0] + c[1] z + ... + c[n] z^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, dropping exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree()]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Value together with first and second derivatives.
    pub fn eval_d2(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp, mut ddp) = (zero, zero, zero);
        for c in self.coeffs.iter().rev() {
            ddp = ddp * z + dp * 2.0;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Coefficients of `z^n p(1/z)`.
    pub fn reversed(&self) -> Poly {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly { coeffs: c }
    }

    /// Largest coefficient magnitude.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// All complex roots, by Aberth–Ehrlich iteration seeded from the Newton
    /// polygon of the coefficient magnitudes. Returned in a deterministic order
    /// (sorted by real part, then imaginary part).
    pub fn roots(&self) -> Vec<Complex64> {
        let mut roots = aberth(&self.coeffs);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        roots
    }
}

/// Aberth–Ehrlich simultaneous root iteration.
///
/// The iteration only evaluates the polynomial by Horner's rule, so roots are
/// resolved to the accuracy with which `p` itself is evaluated near them. A
/// tiny cluster near the origin of a polynomial whose low-order coefficients
/// are small but accurately known is therefore found with good relative
/// accuracy.
pub fn aberth(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let zero = Complex64::new(0.0, 0.0);
    // Roots at zero are exact; strip them.
    let lead_zeros = coeffs.iter().take_while(|c| **c == zero).count();
    if lead_zeros > 0 {
        let mut out = vec![zero; lead_zeros];
        out.extend(aberth(&coeffs[lead_zeros..]));
        return out;
    }
    if n == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }

    let mut z = initial_guesses(coeffs);
    let mut converged = vec![false; n];
    for _ in 0..MAX_ABERTH_ITERS {
        let mut all = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (p, dp) = horner_d1(coeffs, z[i]);
            if p == zero {
                converged[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut sum = zero;
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i] - zj;
                    if diff != zero {
                        sum += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * sum;
            let step = if denom.norm() > 0.0 && denom.is_finite() { ratio / denom } else { ratio };
            if !step.is_finite() {
                converged[i] = true;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                converged[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

fn horner_d1(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut p, mut dp) = (zero, zero);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(k, log|c_k|)`.
fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let sigma = 0.7;
    for w in hull.windows(2) {
        let (k0, l0) = w[0];
        let (k1, l1) = w[1];
        let m = k1 - k0;
        let r = ((l0 - l1) / m as f64).exp();
        for j in 0..m {
            let ang = 2.0 * std::f64::consts::PI * (j as f64) / (m as f64)
                + 2.0 * std::f64::consts::PI * (k1 as f64) / (n as f64)
                + sigma;
            out.push(Complex64::from_polar(r, ang));
        }
    }
    out
}

/// Bivariate polynomial `Σ c[i][j] x^i y^j` of total degree at most `deg`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    deg: usize,
    /// Row-major `(deg+1) x (deg+1)` table; entries with `i + j > deg` are zero.
    c: Vec<Complex64>,
}

impl Poly2 {
    pub fn zeros(deg: usize) -> Self {
        Poly2 { deg, c: vec![Complex64::new(0.0, 0.0); (deg + 1) * (deg + 1)] }
    }

    /// Reads coefficients in graded-lex order: degree 0, then degree 1 as
    /// `x, y`, degree 2 as `x^2, xy, y^2`, and so on (within a degree, the power
    /// of `x` decreases).
    pub fn from_graded_lex(deg: usize, coeffs: &[Complex64]) -> Option<Self> {
        if coeffs.len() != (deg + 1) * (deg + 2) / 2 {
            return None;
        }
        let mut p = Poly2::zeros(deg);
        let mut it = coeffs.iter();
        for total in 0..=deg {
            for i in (0..=total).rev() {
                let j = total - i;
                p.set(i, j, *it.next()?);
            }
        }
        Some(p)
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i > self.deg || j > self.deg {
            return Complex64::new(0.0, 0.0);
        }
        self.c[i * (self.deg + 1) + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let d = self.deg + 1;
        self.c[i * d + j] = v;
    }

    pub fn scale(&self) -> f64 {
        self.c.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.coeffs_in_y(x).eval(y)
    }

    /// `F(x, .)` as a polynomial in `y`.
    pub fn coeffs_in_y(&self, x: Complex64) -> Poly {
        let d = self.deg;
        let c = (0..=d)
            .map(|j| (0..=d).rev().fold(Complex64::new(0.0, 0.0), |acc, i| acc * x + self.get(i, j)))
            .collect();
        Poly::new(c)
    }

    pub fn dx(&self) -> Poly2 {
        let mut out = Poly2::zeros(self.deg);
        for i in 1..=self.deg {
            for j in 0..=self.deg - i {
                out.set(i - 1, j, self.get(i, j) * i as f64);
            }
        }
        out
    }

    pub fn dy(&self) -> Poly2 {
        let mut out = Poly2::zeros(self.deg);
        for i in 0..=self.deg {
            for j in 1..=self.deg - i {
                out.set(i, j - 1, self.get(i, j) * j as f64);
            }
        }
        out
    }

    /// Coefficients of `G(z, v) = F(x0 + z, y0 + v)`.
    pub fn shifted(&self, x0: Complex64, y0: Complex64) -> Poly2 {
        let d = self.deg;
        let binom = |n: usize, k: usize| -> f64 {
            (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
        };
        let mut out = Poly2::zeros(d);
        for i in 0..=d {
            for j in 0..=d - i {
                let c = self.get(i, j);
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..=i {
                    let xa = c * binom(i, a) * x0.powu((i - a) as u32);
                    for b in 0..=j {
                        let term = xa * binom(j, b) * y0.powu((j - b) as u32);
                        let cur = out.get(a, b);
                        out.set(a, b, cur + term);
                    }
                }
            }
        }
        out
    }

    /// Homogeneous part of degree `k`, as the univariate polynomial
    /// `t ↦ F_k(1, t)`.
    pub fn homogeneous_part(&self, k: usize) -> Poly {
        Poly::new((0..=k).map(|j| self.get(k - j, j)).collect())
    }
}
