//! Curves and independent reference computations shared by the integration
//! tests.
#![allow(dead_code)]

use curvcanon::{CurveKind, CurveSpec, Tolerances};
use num_complex::Complex64 as C;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// `y^2 = x^n - 1`.
pub fn x_pow_minus_one(n: usize) -> CurveSpec {
    let mut co = vec![c(0.0, 0.0); n + 1];
    co[0] = c(-1.0, 0.0);
    co[n] = c(1.0, 0.0);
    CurveSpec::new(CurveKind::Hyperelliptic, &co, Tolerances::default()).unwrap()
}

/// `x^4 + y^4 = 1`.
pub fn fermat_quartic() -> CurveSpec {
    let mut co = vec![c(0.0, 0.0); 15];
    co[0] = c(-1.0, 0.0);
    co[10] = c(1.0, 0.0);
    co[14] = c(1.0, 0.0);
    CurveSpec::new(CurveKind::PlaneQuartic, &co, Tolerances::default()).unwrap()
}

/// A perturbation of the Fermat quartic with no symmetry.
pub fn generic_quartic() -> CurveSpec {
    let mut co = vec![c(0.0, 0.0); 15];
    co[0] = c(-1.0, 0.0);
    co[4] = c(0.3, 0.1);
    co[7] = c(-0.2, 0.0);
    co[10] = c(1.0, 0.0);
    co[12] = c(0.25, -0.1);
    co[14] = c(1.0, 0.0);
    CurveSpec::new(CurveKind::PlaneQuartic, &co, Tolerances::default()).unwrap()
}

/// Complete elliptic integral of the first kind from the complementary
/// modulus `k'`.
fn ellipk_from_complement(kp: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, kp);
    for _ in 0..60 {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        a = an;
        b = bn;
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
    }
    std::f64::consts::PI / (2.0 * a)
}

/// Tanh-sinh quadrature on `[0, 1]`; the integrand receives `(t, 1 - t)`.
fn tanh_sinh(f: impl Fn(f64, f64) -> f64, h: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut acc = 0.0;
    let n = (4.0 / h) as i64;
    for k in -n..=n {
        let t = k as f64 * h;
        let s = half_pi * t.sinh();
        let x = 1.0 / (1.0 + (-2.0 * s).exp());
        let xc = 1.0 / (1.0 + (2.0 * s).exp());
        let w = half_pi * t.cosh() / (2.0 * s.cosh().powi(2));
        if x <= 0.0 || xc <= 0.0 || w == 0.0 {
            continue;
        }
        acc += w * f(x, xc);
    }
    acc * h
}

/// `G_kk` for `y^2 = x^n - 1` (basis `x^(k-1) dx / y`, `k >= 1`), by reducing
/// the angular integral to an elliptic integral:
///
/// `G_kk = 8 ∫_0^1 (t^(2k-1) + t^(n-1-2k)) K(2 t^(n/2) / (1 + t^n)) / (1 + t^n) dt`.
pub fn hyperelliptic_gram_diagonal(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let f = |t: f64, tc: f64| {
        let a = t.powf(nf);
        let one_minus_a = -(nf * (-tc).ln_1p()).exp_m1();
        let kp = one_minus_a / (1.0 + a);
        let kk = ellipk_from_complement(kp);
        8.0 * (t.powi(2 * k as i32 - 1) + t.powi(n as i32 - 1 - 2 * k as i32)) * kk / (1.0 + a)
    };
    tanh_sinh(f, 1.0 / 256.0)
}

/// Raw `x`-chart coefficients `h / Φ_y` written out directly, plus a Newton
/// step that keeps `y` on the sheet as `x` moves.
pub enum Model {
    Hyper { f: Vec<C>, g: usize },
    Quartic { f: Vec<C> },
}

impl Model {
    pub fn hyper(f: Vec<C>) -> Self {
        let g = (f.len() - 2) / 2;
        Model::Hyper { f, g }
    }

    fn phi(&self, x: C, y: C) -> (C, C) {
        match self {
            Model::Hyper { f, .. } => {
                let fx = f.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * x + a);
                (y * y - fx, y * 2.0)
            }
            Model::Quartic { f } => {
                // graded-lex monomials x^(deg-j) y^j
                let mut idx = 0;
                let (mut v, mut vy) = (c(0.0, 0.0), c(0.0, 0.0));
                for deg in 0..=4i32 {
                    for j in 0..=deg {
                        let i = deg - j;
                        v += f[idx] * x.powi(i) * y.powi(j);
                        if j > 0 {
                            vy += f[idx] * x.powi(i) * y.powi(j - 1) * j as f64;
                        }
                        idx += 1;
                    }
                }
                (v, vy)
            }
        }
    }

    pub fn follow(&self, x: C, y0: C) -> C {
        let mut y = y0;
        for _ in 0..50 {
            let (v, vy) = self.phi(x, y);
            let step = v / vy;
            y -= step;
            if step.norm() < 1e-17 * (1.0 + y.norm()) {
                break;
            }
        }
        y
    }

    pub fn raw(&self, x: C, y: C) -> Vec<C> {
        let (_, vy) = self.phi(x, y);
        match self {
            Model::Hyper { g, .. } => (0..*g).map(|k| x.powi(k as i32) * 2.0 / vy).collect(),
            Model::Quartic { .. } => vec![c(1.0, 0.0) / vy, x / vy, y / vy],
        }
    }
}

/// `Θ = -(2/λ) ∂∂̄ log λ` with the Laplacian from a five-point stencil.
pub fn fd_theta(model: &Model, t: &curvcanon::linalg::CMatrix, x: C, y: C, h: f64) -> f64 {
    let lambda = |x: C| {
        let yy = model.follow(x, y);
        let raw = model.raw(x, yy);
        let n = raw.len();
        (0..n).map(|i| (0..n).map(|k| t[(i, k)] * raw[k]).sum::<C>().norm_sqr()).sum::<f64>()
    };
    let l0 = lambda(x);
    let lap = [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)]
        .iter()
        .map(|d| lambda(x + d).ln() - l0.ln())
        .sum::<f64>()
        / (h * h);
    -(2.0 / l0) * lap / 4.0
}
