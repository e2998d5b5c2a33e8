use num_complex::Complex64;
use thiserror::Error;

use crate::curve::Chart;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("f is not squarefree: roots near {root} are only {separation:e} apart")]
    NotSquarefree { root: Complex64, separation: f64 },

    #[error("curve is singular near ({x}, {y})")]
    SingularCurve { x: Complex64, y: Complex64 },

    #[error("unsupported degree: {0}")]
    UnsupportedDegree(String),

    #[error("chart {chart:?} is not valid at ({x}, {y})")]
    ChartInvalid { chart: Chart, x: Complex64, y: Complex64 },

    #[error("point ({x}, {y}) is not on the curve (residual {residual:e})")]
    NotOnCurve { x: Complex64, y: Complex64, residual: f64 },

    #[error("quadrature did not converge: best estimate {estimate}, relative error {rel_error:e}")]
    NoConvergence { estimate: String, rel_error: f64 },

    #[error("branch points too close to desingularize (patch radius {radius:e})")]
    SingularitySaturation { radius: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error(
        "evaluation matrix is rank deficient: sigma_min = {sigma_min:e} <= {tol:e}; for d below \
         the gonality this is a numerical failure, since h^0(O(D)) = 1 forces full rank"
    )]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("divisor points are not distinct (separation {separation:e})")]
    PointsNotDistinct { separation: f64 },

    #[error("gonality gate failed: d = {d} is not below the gonality bound {gonality}")]
    GateFailed { d: usize, gonality: usize },

    #[error("metric agreement failed: relative deviation {deviation:e} for divisor {divisor}")]
    AgreementFailed { deviation: f64, divisor: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
