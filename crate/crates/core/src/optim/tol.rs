//! Tolerances shared by the library and its acceptance tests.

/// Cholesky reconstruction bound, relative to ‖A‖∞.
pub const SPD_RECONSTRUCTION: f64 = 1e-10;

/// Residual bound for SPD solves, relative to ‖rhs‖.
pub const SPD_SOLVE_RESIDUAL: f64 = 1e-9;

/// Smallest admissible Cholesky pivot relative to the matrix diagonal.
pub const SPD_MIN_PIVOT: f64 = 1e-14;

/// Pivot magnitude below which a simplex tableau entry is treated as zero.
pub const SIMPLEX_PIVOT: f64 = 1e-11;

/// Primal feasibility tolerance for LP solutions.
pub const LP_FEASIBILITY: f64 = 1e-9;

/// Reduced-cost threshold for an entering column.
pub const LP_OPTIMALITY: f64 = 1e-10;

/// Consecutive degenerate pivots before the simplex falls back to Bland's rule.
pub const SIMPLEX_DEGENERATE_STREAK: usize = 25;

/// Surplus-floor bisection: |cs - tau| <= this * max(1, |tau|).
pub const BISECTION_REL: f64 = 1e-8;

pub const BISECTION_MAX_ITER: usize = 200;

/// First-order residual (∞-norm) required of the renewable fixed point.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-10;

pub const FIXED_POINT_DAMPING: f64 = 0.5;

pub const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Relative improvement a pattern-search move must beat to be accepted.
pub const PATTERN_IMPROVEMENT: f64 = 1e-12;
