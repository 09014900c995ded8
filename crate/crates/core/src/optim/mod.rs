//! Numerical kernels shared by the pricing modules.
//!
//! Everything here is dense and small (at most a few hundred unknowns), and
//! every routine is deterministic for identical inputs.

mod bisect;
mod fixed_point;
mod pattern;
mod simplex;
mod spd;
pub mod tol;

pub use bisect::{bisect_increasing, Bisection};
pub use fixed_point::{fixed_point, FixedPointOptions, FixedPointSolution};
pub use pattern::{pattern_search, PatternSearchOptions, PatternSearchResult};
pub use simplex::{simplex_solve, LpProblem, LpSolution, LpStatus};
pub use spd::SpdFactorization;
