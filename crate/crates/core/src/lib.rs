//! Canonical metrics and their curvature on explicit algebraic curves.
//!
//! The crate evaluates holomorphic 1-forms on hyperelliptic curves and
//! smooth plane quartics, computes their L² Gram matrix by desingularized
//! quadrature, and from it the pulled-back flat metric of the Jacobian: its
//! density and Gaussian curvature for `d = 1`, and for reduced divisors of
//! degree `d ≥ 2` the comparison between the cotangent metric of the
//! Abel–Jacobi map and the quotient metric of the Grassmannian.

pub mod curvature;
pub mod curve;
pub mod error;
pub mod l2;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod symprod;

pub use curve::{Chart, CurveKind, CurvePoint, CurveSpec, RawCoeffVector, Tolerances};
pub use error::{Error, Result};
pub use l2::{gram_matrix, orthonormalizer, GramData};
