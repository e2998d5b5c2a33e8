//! Explicit algebraic curves, their charts, and the standard basis of
//! holomorphic 1-forms.
//!
//! Two families are supported:
//!
//! * hyperelliptic `y^2 = f(x)` with `f` squarefree of degree `2g+1` or
//!   `2g+2`, basis `x^(k-1) dx / y` for `k = 1..g`;
//! * smooth plane quartics `F(x, y) = 0`, basis `{1, x, y} dx / F_y`.
//!
//! Both bases are written uniformly as `h(x, y) dx / Φ_y` where `Φ` is the
//! defining function (`y^2 - f(x)` or `F`) and `h` is a vector of
//! polynomials (`2 x^(k-1)` or `(1, x, y)`). In the `y` chart the same form
//! reads `-h dy / Φ_x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Poly, Poly2};

type C = Complex64;

const ZERO: C = C { re: 0.0, im: 0.0 };
const ONE: C = C { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Hyperelliptic,
    PlaneQuartic,
}

/// Numerical tolerances used while validating curves and points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Minimum root separation, relative to `max(1, max |root|)`.
    pub root_separation: f64,
    /// Minimum partial-derivative magnitude for a chart to be valid, relative
    /// to the coefficient scale.
    pub chart: f64,
    /// Maximum residual of the defining equation, relative to the magnitude
    /// of its terms.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root_separation: 1e-6, chart: 1e-10, residual: 1e-8 }
    }
}

/// Local coordinate in which 1-form coefficients are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// Coordinate `x`; needs `∂Φ/∂y ≠ 0`.
    X,
    /// Coordinate `y`; needs `∂Φ/∂x ≠ 0`.
    Y,
    /// Coordinate `t = 1/x` near the two points at infinity of an even-degree
    /// hyperelliptic model, with fibre coordinate `s = y / x^(g+1)`.
    Inf,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::X => "x",
            Chart::Y => "y",
            Chart::Inf => "inf",
        }
    }
}

/// A point on the curve together with the chart it is expressed in.
///
/// For [`Chart::X`] and [`Chart::Y`], `(x, y)` are affine coordinates. For
/// [`Chart::Inf`] they hold `(t, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: C,
    pub y: C,
    pub chart: Chart,
}

/// Coefficients of the standard basis forms in a chart coordinate, and their
/// derivatives with respect to that coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCoeffVector {
    pub u: Vec<C>,
    pub du: Vec<C>,
}

impl RawCoeffVector {
    /// Re-expresses the coefficients in a new chart, given
    /// `(J, dJ) = (d old / d new, dJ / d new)`.
    pub fn transformed(&self, j: C, dj: C) -> RawCoeffVector {
        RawCoeffVector {
            u: self.u.iter().map(|u| u * j).collect(),
            du: self.u.iter().zip(&self.du).map(|(u, du)| du * j * j + u * dj).collect(),
        }
    }
}

/// A ramification point of the projection to `x`: `index` sheets meet at
/// `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ramification {
    pub x: C,
    pub y: C,
    pub index: usize,
}

/// Values and partials of the defining function `Φ` at a curve point.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub x: C,
    pub y: C,
    pub px: C,
    pub py: C,
    pub pxx: C,
    pub pxy: C,
    pub pyy: C,
}

#[derive(Clone, Debug)]
enum Model {
    Hyper { f: Poly, df: Poly, ddf: Poly },
    Quartic { f: Poly2, fx: Poly2, fy: Poly2, local: Vec<LocalQuartic> },
}

/// `F` and its partials Taylor-shifted to a ramification point, so that the
/// sheets close to it can be resolved with relative accuracy.
#[derive(Clone, Debug)]
struct LocalQuartic {
    x0: C,
    y0: C,
    g: Poly2,
    gx: Poly2,
    gy: Poly2,
    gxx: Poly2,
    gxy: Poly2,
    gyy: Poly2,
}

#[derive(Clone, Debug)]
pub struct CurveSpec {
    kind: CurveKind,
    coeffs: Vec<C>,
    genus: usize,
    branch_points: Vec<C>,
    infinite_branch_point: bool,
    gonality_lower: usize,
    ramifications: Vec<Ramification>,
    tol: Tolerances,
    scale: f64,
    model: Model,
}

/// Outcome of [`CurveSpec::gonality_gate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GonalityVerdict {
    pub pass: bool,
    pub certificate: String,
}

impl CurveSpec {
    /// Validates a curve and derives its genus, branch data and gonality bound.
    ///
    /// Hyperelliptic coefficients are those of `f(x)` in ascending powers.
    /// Quartic coefficients are the 15 coefficients of `F(x, y)` in graded-lex
    /// order: `1, x, y, x^2, xy, y^2, x^3, x^2y, ...`.
    pub fn new(kind: CurveKind, coeffs: &[C], tol: Tolerances) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("coefficient list is empty".into()));
        }
        match kind {
            CurveKind::Hyperelliptic => Self::hyperelliptic(coeffs, tol),
            CurveKind::PlaneQuartic => Self::quartic(coeffs, tol),
        }
    }

    fn hyperelliptic(coeffs: &[C], tol: Tolerances) -> Result<Self> {
        if *coeffs.last().unwrap() == ZERO {
            return Err(Error::InvalidInput("leading coefficient of f is zero".into()));
        }
        let n = coeffs.len() - 1;
        if n < 5 {
            return Err(Error::UnsupportedDegree(format!(
                "deg f = {n} gives genus {} (need genus >= 2, deg f >= 5)",
                n.saturating_sub(1) / 2
            )));
        }
        let f = Poly::new(coeffs.to_vec());
        let df = f.derivative();
        let ddf = df.derivative();
        let mut roots = f.roots();
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let (p, dp, _) = f.eval_d2(*r);
                if dp != ZERO {
                    *r -= p / dp;
                }
            }
        }
        let root_scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let sep = (roots[i] - roots[j]).norm();
                if sep <= tol.root_separation * root_scale {
                    return Err(Error::NotSquarefree { root: (roots[i] + roots[j]) * 0.5, separation: sep });
                }
            }
        }
        let genus = (n - 1) / 2;
        let ramifications = roots.iter().map(|&x| Ramification { x, y: ZERO, index: 2 }).collect();
        Ok(CurveSpec {
            kind: CurveKind::Hyperelliptic,
            coeffs: coeffs.to_vec(),
            genus,
            infinite_branch_point: n % 2 == 1,
            branch_points: roots,
            gonality_lower: 2,
            ramifications,
            tol,
            scale: f.scale(),
            model: Model::Hyper { f, df, ddf },
        })
    }

    fn quartic(coeffs: &[C], tol: Tolerances) -> Result<Self> {
        let f = Poly2::from_graded_lex(4, coeffs).ok_or_else(|| {
            Error::UnsupportedDegree(format!("plane quartic needs 15 coefficients, got {}", coeffs.len()))
        })?;
        if f.get(0, 4) == ZERO {
            return Err(Error::UnsupportedDegree(
                "the y^4 coefficient must be nonzero (no vertical asymptotes)".into(),
            ));
        }
        let scale = f.scale();
        let fx = f.dx();
        let fy = f.dy();

        check_smooth_at_infinity(&f, tol)?;

        let disc = discriminant_in_y(&f);
        let mut crit: Vec<(C, usize)> = cluster(&disc.roots(), 1e-4)
            .into_iter()
            .map(|(b, m)| (polish_multiple_root(&disc, b, m), m))
            .collect();
        crit.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));

        let mut ramifications = Vec::new();
        let mut local = Vec::new();
        for (b, m) in crit {
            let ys = f.coeffs_in_y(b).roots();
            // A root of multiplicity m of the discriminant has Σ (e_i - 1) = m
            // over the ramification points above it.
            let groups = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2]
                .iter()
                .map(|&tol| cluster(&ys, tol))
                .find(|g| g.iter().map(|(_, e)| e - 1).sum::<usize>() == m)
                .unwrap_or_else(|| cluster(&ys, 1e-3));
            for (y0, e) in groups {
                if e < 2 {
                    continue;
                }
                let (x0, y0) = polish_ramification(&f, b, y0, e);
                let fxv = fx.eval(x0, y0);
                if fxv.norm() <= tol.chart * scale.max(1.0) {
                    return Err(Error::SingularCurve { x: x0, y: y0 });
                }
                ramifications.push(Ramification { x: x0, y: y0, index: e });
                let g = f.shifted(x0, y0);
                let gx = g.dx();
                let gy = g.dy();
                local.push(LocalQuartic {
                    x0,
                    y0,
                    gxx: gx.dx(),
                    gxy: gx.dy(),
                    gyy: gy.dy(),
                    g,
                    gx,
                    gy,
                });
            }
        }

        Ok(CurveSpec {
            kind: CurveKind::PlaneQuartic,
            coeffs: coeffs.to_vec(),
            genus: 3,
            branch_points: Vec::new(),
            infinite_branch_point: false,
            gonality_lower: 3,
            ramifications,
            tol,
            scale,
            model: Model::Quartic { f, fx, fy, local },
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Finite branch points of a hyperelliptic curve (roots of `f`); empty for
    /// quartics.
    pub fn branch_points(&self) -> &[C] {
        &self.branch_points
    }

    /// Whether the point at infinity of an odd-degree model is a branch point.
    pub fn infinite_branch_point(&self) -> bool {
        self.infinite_branch_point
    }

    /// Number of branch points, counting the one at infinity for odd degree.
    pub fn branch_point_count(&self) -> usize {
        self.branch_points.len() + usize::from(self.infinite_branch_point)
    }

    pub fn gonality_lower(&self) -> usize {
        self.gonality_lower
    }

    /// Finite ramification points of the projection `(x, y) ↦ x`.
    pub fn ramifications(&self) -> &[Ramification] {
        &self.ramifications
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Largest coefficient magnitude.
    pub fn coeff_scale(&self) -> f64 {
        self.scale
    }

    /// Whether [`Chart::Inf`] is available (even-degree hyperelliptic models).
    pub fn has_inf_chart(&self) -> bool {
        matches!(self.model, Model::Hyper { ref f, .. } if f.degree() % 2 == 0)
    }

    pub fn gonality_gate(&self, d: usize) -> GonalityVerdict {
        let pass = d >= 1 && d < self.gonality_lower;
        let reason = match self.kind {
            CurveKind::Hyperelliptic => "hyperelliptic curves have gonality exactly 2",
            CurveKind::PlaneQuartic => {
                "a smooth plane quartic is canonically embedded, hence not hyperelliptic: gonality >= 3"
            }
        };
        let certificate = format!(
            "d = {d} {} gonality lower bound {} ({reason})",
            if pass { "<" } else { ">=" },
            self.gonality_lower
        );
        GonalityVerdict { pass, certificate }
    }

    /// Sheets over `x`: every `y` with `Φ(x, y) = 0`.
    pub fn fiber(&self, x: C) -> Vec<C> {
        match &self.model {
            Model::Hyper { f, .. } => {
                let y = self.hyper_f(f, x, None).sqrt();
                if y == ZERO {
                    vec![ZERO]
                } else {
                    vec![y, -y]
                }
            }
            Model::Quartic { f, .. } => f.coeffs_in_y(x).roots(),
        }
    }

    /// Checks a point and returns it tagged with `chart`.
    pub fn point(&self, x: C, y: C, chart: Chart) -> Result<CurvePoint> {
        let p = CurvePoint { x, y, chart };
        let res = self.residual(&p)?;
        if res > self.tol.residual {
            return Err(Error::NotOnCurve { x, y, residual: res });
        }
        if !self.chart_valid(&p, chart)? {
            return Err(Error::ChartInvalid { chart, x, y });
        }
        Ok(p)
    }

    /// Picks whichever affine chart is better conditioned at `(x, y)`.
    pub fn best_chart(&self, x: C, y: C) -> Chart {
        let j = self.jet(x, y);
        if j.py.norm() >= j.px.norm() {
            Chart::X
        } else {
            Chart::Y
        }
    }

    /// Relative residual of the defining equation at `p`.
    pub fn residual(&self, p: &CurvePoint) -> Result<f64> {
        match (&self.model, p.chart) {
            (Model::Hyper { f, .. }, Chart::Inf) => {
                let ft = self.reversed_f(f)?;
                let mag = p.y.norm_sqr() + ft.coeffs().iter().rev().fold(0.0, |a, c| a * p.x.norm() + c.norm());
                Ok((p.y * p.y - ft.eval(p.x)).norm() / mag.max(1.0))
            }
            (Model::Hyper { f, .. }, _) => {
                let mag = p.y.norm_sqr() + f.coeffs().iter().rev().fold(0.0, |a, c| a * p.x.norm() + c.norm());
                Ok((p.y * p.y - f.eval(p.x)).norm() / mag.max(1.0))
            }
            (Model::Quartic { .. }, Chart::Inf) => Err(self.inf_unsupported(p)),
            (Model::Quartic { f, .. }, _) => {
                let (ax, ay) = (p.x.norm(), p.y.norm());
                let mut mag = 0.0;
                for i in 0..=4 {
                    for j in 0..=4 - i {
                        mag += f.get(i, j).norm() * ax.powi(i as i32) * ay.powi(j as i32);
                    }
                }
                Ok(f.eval(p.x, p.y).norm() / mag.max(1.0))
            }
        }
    }

    fn chart_threshold(&self) -> f64 {
        self.tol.chart * self.scale.max(1.0)
    }

    /// Whether `chart` can be used at `p` (whose coordinates are in `p.chart`).
    pub fn chart_valid(&self, p: &CurvePoint, chart: Chart) -> Result<bool> {
        let thr = self.chart_threshold();
        match chart {
            Chart::Inf => {
                let Some((t, s)) = self.inf_coords(p)? else { return Ok(false) };
                let _ = t;
                Ok((s * 2.0).norm() > thr)
            }
            Chart::X | Chart::Y => {
                let Some((x, y)) = self.affine(p)? else { return Ok(false) };
                let j = self.jet(x, y);
                Ok(match chart {
                    Chart::X => j.py.norm() > thr,
                    _ => j.px.norm() > thr,
                })
            }
        }
    }

    /// Affine coordinates of `p`, or `None` at infinity.
    pub fn affine(&self, p: &CurvePoint) -> Result<Option<(C, C)>> {
        match p.chart {
            Chart::X | Chart::Y => Ok(Some((p.x, p.y))),
            Chart::Inf => {
                if p.x == ZERO {
                    return Ok(None);
                }
                let g1 = (self.genus + 1) as u32;
                Ok(Some((p.x.inv(), p.y / p.x.powu(g1))))
            }
        }
    }

    /// `(t, s)` coordinates of `p` at infinity, if the `Inf` chart exists.
    fn inf_coords(&self, p: &CurvePoint) -> Result<Option<(C, C)>> {
        if !self.has_inf_chart() {
            return Ok(None);
        }
        match p.chart {
            Chart::Inf => Ok(Some((p.x, p.y))),
            _ => {
                if p.x == ZERO {
                    return Ok(None);
                }
                let t = p.x.inv();
                Ok(Some((t, p.y * t.powu((self.genus + 1) as u32))))
            }
        }
    }

    /// Re-expresses `p` in another chart.
    pub fn to_chart(&self, p: &CurvePoint, chart: Chart) -> Result<CurvePoint> {
        if !self.chart_valid(p, chart)? {
            let (x, y) = (p.x, p.y);
            return Err(Error::ChartInvalid { chart, x, y });
        }
        match chart {
            Chart::Inf => {
                let (t, s) = self.inf_coords(p)?.expect("validated");
                Ok(CurvePoint { x: t, y: s, chart })
            }
            _ => {
                let (x, y) = self.affine(p)?.expect("validated");
                Ok(CurvePoint { x, y, chart })
            }
        }
    }

    /// Image under the hyperelliptic involution `(x, y) ↦ (x, -y)`.
    pub fn involution(&self, p: &CurvePoint) -> Option<CurvePoint> {
        match self.kind {
            CurveKind::Hyperelliptic => Some(CurvePoint { x: p.x, y: -p.y, chart: p.chart }),
            CurveKind::PlaneQuartic => None,
        }
    }

    fn inf_unsupported(&self, p: &CurvePoint) -> Error {
        Error::ChartInvalid { chart: Chart::Inf, x: p.x, y: p.y }
    }

    fn reversed_f(&self, f: &Poly) -> Result<Poly> {
        if f.degree() % 2 == 1 {
            return Err(Error::InvalidInput(
                "odd-degree models have a single branch point at infinity; evaluation there is unsupported"
                    .into(),
            ));
        }
        Ok(f.reversed())
    }

    /// `f(x)` in product form `lc · Π (x - b_i)`, with `x - b_k` replaced by
    /// `z` when `local = Some((k, z))`.
    fn hyper_f(&self, f: &Poly, x: C, local: Option<(usize, C)>) -> C {
        let mut acc = f.leading();
        for (i, b) in self.branch_points.iter().enumerate() {
            acc *= match local {
                Some((k, z)) if k == i => z,
                _ => x - b,
            };
        }
        acc
    }

    /// Partials of `Φ` at an affine point.
    pub fn jet(&self, x: C, y: C) -> Jet {
        match &self.model {
            Model::Hyper { df, ddf, .. } => Jet {
                x,
                y,
                px: -df.eval(x),
                py: y * 2.0,
                pxx: -ddf.eval(x),
                pxy: ZERO,
                pyy: C::new(2.0, 0.0),
            },
            Model::Quartic { fx, fy, .. } => {
                let (fxx, fxy, fyy) = (fx.dx(), fx.dy(), fy.dy());
                Jet {
                    x,
                    y,
                    px: fx.eval(x, y),
                    py: fy.eval(x, y),
                    pxx: fxx.eval(x, y),
                    pxy: fxy.eval(x, y),
                    pyy: fyy.eval(x, y),
                }
            }
        }
    }

    /// `h(x, y)` and its partials, where the basis is `h dx / Φ_y`.
    pub(crate) fn numerators(&self, x: C, y: C) -> (Vec<C>, Vec<C>, Vec<C>) {
        match self.kind {
            CurveKind::Hyperelliptic => {
                let g = self.genus;
                let mut h = Vec::with_capacity(g);
                let mut hx = Vec::with_capacity(g);
                let mut pow = ONE;
                let mut prev = ZERO;
                for k in 0..g {
                    h.push(pow * 2.0);
                    hx.push(prev * 2.0 * k as f64);
                    prev = pow;
                    pow *= x;
                }
                (h, hx, vec![ZERO; g])
            }
            CurveKind::PlaneQuartic => {
                (vec![ONE, x, y], vec![ZERO, ONE, ZERO], vec![ZERO, ZERO, ONE])
            }
        }
    }

    /// Coefficients and derivatives in an affine chart, from a jet.
    pub fn eval_jet(&self, jet: &Jet, chart: Chart) -> Result<RawCoeffVector> {
        let (h, hx, hy) = self.numerators(jet.x, jet.y);
        let thr = self.chart_threshold();
        match chart {
            Chart::X => {
                if jet.py.norm() <= thr {
                    return Err(Error::ChartInvalid { chart, x: jet.x, y: jet.y });
                }
                let dy = -jet.px / jet.py;
                let dpy = jet.pxy + jet.pyy * dy;
                let inv = jet.py.inv();
                let u: Vec<C> = h.iter().map(|h| h * inv).collect();
                let du = (0..h.len())
                    .map(|k| (hx[k] + hy[k] * dy) * inv - h[k] * dpy * inv * inv)
                    .collect();
                Ok(RawCoeffVector { u, du })
            }
            Chart::Y => {
                if jet.px.norm() <= thr {
                    return Err(Error::ChartInvalid { chart, x: jet.x, y: jet.y });
                }
                let dx = -jet.py / jet.px;
                let dpx = jet.pxx * dx + jet.pxy;
                let inv = jet.px.inv();
                let u: Vec<C> = h.iter().map(|h| -h * inv).collect();
                let du = (0..h.len())
                    .map(|k| -(hx[k] * dx + hy[k]) * inv + h[k] * dpx * inv * inv)
                    .collect();
                Ok(RawCoeffVector { u, du })
            }
            Chart::Inf => Err(Error::InvalidInput("eval_jet works in affine charts only".into())),
        }
    }

    /// Coefficients of the standard basis forms at `p`, in `p`'s chart.
    pub fn standard_basis_eval(&self, p: &CurvePoint) -> Result<RawCoeffVector> {
        let res = self.residual(p)?;
        if res > self.tol.residual {
            return Err(Error::NotOnCurve { x: p.x, y: p.y, residual: res });
        }
        match p.chart {
            Chart::X | Chart::Y => self.eval_jet(&self.jet(p.x, p.y), p.chart),
            Chart::Inf => {
                let Model::Hyper { f, .. } = &self.model else {
                    return Err(self.inf_unsupported(p));
                };
                let ft = self.reversed_f(f)?;
                let (t, s) = (p.x, p.y);
                if (s * 2.0).norm() <= self.chart_threshold() {
                    return Err(self.inf_unsupported(p));
                }
                let dft = ft.derivative().eval(t);
                let g = self.genus;
                let mut u = Vec::with_capacity(g);
                let mut du = Vec::with_capacity(g);
                for k in 1..=g {
                    let e = (g - k) as u32;
                    let te = t.powu(e);
                    u.push(-te / s);
                    let lower = if e == 0 { ZERO } else { -t.powu(e - 1) * e as f64 / s };
                    du.push(lower + te * dft / (s * s * s * 2.0));
                }
                Ok(RawCoeffVector { u, du })
            }
        }
    }

    /// `(J, dJ)` with `J = d(coord of chart_a) / d(coord of chart_b)` and
    /// `dJ = dJ / d(coord of chart_b)`, so that coefficients transform as
    /// `u_b = u_a J` and `du_b = du_a J^2 + u_a dJ`.
    pub fn transition_scale(&self, p: &CurvePoint, a: Chart, b: Chart) -> Result<(C, C)> {
        for c in [a, b] {
            if !self.chart_valid(p, c)? {
                return Err(Error::ChartInvalid { chart: c, x: p.x, y: p.y });
            }
        }
        if a == b {
            return Ok((ONE, ZERO));
        }
        let (x, y) = self.affine(p)?.ok_or(Error::ChartInvalid { chart: Chart::X, x: p.x, y: p.y })?;
        let jet = self.jet(x, y);
        let x_per_y = || {
            // dx/dy and d^2x/dy^2 along the curve
            let xp = -jet.py / jet.px;
            let num = (jet.pxy * xp + jet.pyy) * jet.px - jet.py * (jet.pxx * xp + jet.pxy);
            (xp, -num / (jet.px * jet.px))
        };
        let y_per_x = || {
            let yp = -jet.px / jet.py;
            let num = (jet.pxx + jet.pxy * yp) * jet.py - jet.px * (jet.pxy + jet.pyy * yp);
            (yp, -num / (jet.py * jet.py))
        };
        // x as a function of t = 1/x and vice versa
        let x_per_t = || {
            let t = x.inv();
            (-(t * t).inv(), (t * t * t).inv() * 2.0)
        };
        let t_per_x = || (-(x * x).inv(), (x * x * x).inv() * 2.0);
        let compose = |outer: (C, C), inner: (C, C)| (outer.0 * inner.0, outer.1 * inner.0 * inner.0 + outer.0 * inner.1);
        Ok(match (a, b) {
            (Chart::X, Chart::Y) => x_per_y(),
            (Chart::Y, Chart::X) => y_per_x(),
            (Chart::X, Chart::Inf) => x_per_t(),
            (Chart::Inf, Chart::X) => t_per_x(),
            (Chart::Y, Chart::Inf) => compose(y_per_x(), x_per_t()),
            (Chart::Inf, Chart::Y) => compose(t_per_x(), x_per_y()),
            _ => unreachable!(),
        })
    }

    /// Jets of every sheet over `x`.
    pub(crate) fn fiber_jets(&self, x: C) -> Vec<Jet> {
        match &self.model {
            Model::Hyper { .. } => self.fiber(x).into_iter().map(|y| self.jet(x, y)).collect(),
            Model::Quartic { f, .. } => {
                let ys = f.coeffs_in_y(x).roots();
                ys.into_iter().map(|y| self.jet(x, y)).collect()
            }
        }
    }

    /// Jets of every sheet over `x = ramification[k].x + z`, computed in
    /// coordinates centred at the ramification point so the coalescing sheets
    /// keep their relative accuracy.
    pub(crate) fn fiber_jets_local(&self, k: usize, z: C) -> Vec<Jet> {
        match &self.model {
            Model::Hyper { f, df, ddf } => {
                let x = self.branch_points[k] + z;
                let fx = self.hyper_f(f, x, Some((k, z)));
                let y = fx.sqrt();
                let (px, pxx) = (-df.eval(x), -ddf.eval(x));
                let two = C::new(2.0, 0.0);
                [y, -y]
                    .into_iter()
                    .map(|y| Jet { x, y, px, py: y * 2.0, pxx, pxy: ZERO, pyy: two })
                    .collect()
            }
            Model::Quartic { local, .. } => {
                let l = &local[k];
                let x = l.x0 + z;
                let vs = l.g.coeffs_in_y(z).roots();
                vs.into_iter()
                    .map(|v| Jet {
                        x,
                        y: l.y0 + v,
                        px: l.gx.eval(z, v),
                        py: l.gy.eval(z, v),
                        pxx: l.gxx.eval(z, v),
                        pxy: l.gxy.eval(z, v),
                        pyy: l.gyy.eval(z, v),
                    })
                    .collect()
            }
        }
    }

    /// `Φ_x` at ramification point `k` and the lowest nonvanishing pure `y`
    /// coefficient `a_e` there, so that `x - x_k ≈ -(a_e / Φ_x) (y - y_k)^e`.
    pub(crate) fn ramification_profile(&self, k: usize) -> (C, C) {
        match &self.model {
            Model::Hyper { df, .. } => (-df.eval(self.branch_points[k]), ONE),
            Model::Quartic { local, .. } => {
                let l = &local[k];
                (l.gx.eval(ZERO, ZERO), l.g.get(0, self.ramifications[k].index))
            }
        }
    }

    /// The `x` near ramification point `k` with `(x, y)` on the curve, by
    /// Newton in the local coordinates.
    pub(crate) fn solve_x_near(&self, k: usize, y: C) -> Option<C> {
        let r = self.ramifications[k];
        let (px, ae) = self.ramification_profile(k);
        let v = y - r.y;
        let mut z = -ae * v.powu(r.index as u32) / px;
        for _ in 0..60 {
            let (val, dval) = match &self.model {
                Model::Hyper { f, df, .. } => (y * y - self.hyper_f(f, r.x + z, Some((k, z))), -df.eval(r.x + z)),
                Model::Quartic { local, .. } => (local[k].g.eval(z, v), local[k].gx.eval(z, v)),
            };
            let step = val / dval;
            z -= step;
            if !z.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * z.norm() || step.norm() == 0.0 {
                return Some(r.x + z);
            }
        }
        None
    }

    /// Distinct critical values of `x`, each with the largest ramification
    /// index above it and the index of a ramification point there.
    pub(crate) fn critical_values(&self) -> Vec<(C, usize, usize)> {
        let mut out: Vec<(C, usize, usize)> = Vec::new();
        for (i, r) in self.ramifications.iter().enumerate() {
            match out.iter_mut().find(|(x, _, _)| (*x - r.x).norm() <= 1e-9 * (1.0 + r.x.norm())) {
                Some(entry) => {
                    if r.index > entry.1 {
                        entry.1 = r.index;
                        entry.2 = i;
                    }
                }
                None => out.push((r.x, r.index, i)),
            }
        }
        out
    }
}

/// Groups values within `rel * max(1, |z|)` of each other; returns centroids
/// and cluster sizes.
fn cluster(values: &[C], rel: f64) -> Vec<(C, usize)> {
    let mut used = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![values[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..values.len() {
                if used[j] {
                    continue;
                }
                let near = members.iter().any(|m| (*m - values[j]).norm() <= rel * m.norm().max(1.0));
                if near {
                    used[j] = true;
                    members.push(values[j]);
                    grew = true;
                }
            }
        }
        let n = members.len();
        let centre = members.iter().sum::<C>() / n as f64;
        out.push((centre, n));
    }
    out
}

/// `Res_y(F, F_y)` as a polynomial in `x`, by sampling the Sylvester
/// determinant on a circle and interpolating.
fn discriminant_in_y(f: &Poly2) -> Poly {
    const N: usize = 32;
    let fy = f.dy();
    let samples: Vec<C> = (0..N)
        .map(|m| {
            let x = C::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / N as f64);
            let p = f.coeffs_in_y(x);
            let q = fy.coeffs_in_y(x);
            sylvester_det(p.coeffs(), q.coeffs())
        })
        .collect();
    let mut coeffs: Vec<C> = (0..N)
        .map(|k| {
            let mut acc = ZERO;
            for (m, s) in samples.iter().enumerate() {
                acc += s * C::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * m) as f64 / N as f64);
            }
            acc / N as f64
        })
        .collect();
    let big = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in coeffs.iter_mut() {
        if c.norm() < 1e-12 * big {
            *c = ZERO;
        }
    }
    Poly::new(coeffs)
}

fn sylvester_det(p: &[C], q: &[C]) -> C {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    let mut s = nalgebra::DMatrix::<C>::zeros(size, size);
    for r in 0..n {
        for (k, c) in p.iter().rev().enumerate() {
            s[(r, r + k)] = *c;
        }
    }
    for r in 0..m {
        for (k, c) in q.iter().rev().enumerate() {
            s[(n + r, r + k)] = *c;
        }
    }
    s.determinant()
}

/// A root of multiplicity `m` is a simple root of the `(m-1)`-th derivative.
fn polish_multiple_root(p: &Poly, z0: C, m: usize) -> C {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let dq = q.derivative();
    let mut z = z0;
    for _ in 0..6 {
        let d = dq.eval(z);
        if d == ZERO {
            break;
        }
        let step = q.eval(z) / d;
        if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
            break;
        }
        z -= step;
    }
    z
}

/// Newton on `(F, ∂_y^(e-1) F) = 0`, which is regular at a ramification
/// point of index `e` on a smooth curve.
fn polish_ramification(f: &Poly2, x0: C, y0: C, e: usize) -> (C, C) {
    let (mut x, mut y) = (x0, y0);
    for _ in 0..4 {
        let g = f.shifted(x, y);
        let (a, b) = (g.get(1, 0), g.get(0, 1));
        let (c, d) = (g.get(1, e - 1), g.get(0, e) * e as f64);
        let (r0, r1) = (g.get(0, 0), g.get(0, e - 1));
        let det = a * d - b * c;
        if det.norm() == 0.0 {
            break;
        }
        let dz = (d * r0 - b * r1) / det;
        let dv = (a * r1 - c * r0) / det;
        if !(dz.is_finite() && dv.is_finite()) {
            break;
        }
        x -= dz;
        y -= dv;
        if dz.norm() + dv.norm() <= 1e-15 * (1.0 + x.norm() + y.norm()) {
            break;
        }
    }
    (x, y)
}

fn check_smooth_at_infinity(f: &Poly2, tol: Tolerances) -> Result<()> {
    let top = f.homogeneous_part(4);
    let cubic = f.homogeneous_part(3);
    for (t, mult) in cluster(&top.roots(), 1e-6) {
        if mult >= 2 && cubic.eval(t).norm() <= tol.chart * f.scale().max(1.0) * 1e3 {
            return Err(Error::SingularCurve { x: C::new(f64::INFINITY, 0.0), y: t });
        }
    }
    Ok(())
}
