//! Exact rational arithmetic: scalars, polynomials, truncated power series
//! and linear algebra. Nothing in here touches floating point except the
//! explicit `to_f64` conversions.

pub mod interp;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod series;

pub use interp::interpolate_poly;
pub use linalg::{rref, solve_linear, LinearSolution, Matrix, Rref};
pub use poly::UniPoly;
pub use scalar::ExactScalar;
pub use series::TruncSeries;
