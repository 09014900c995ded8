use nalgebra::DVector;

use super::tol;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Step fraction toward `map(x)`; must lie in (0, 1].
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: tol::FIXED_POINT_DAMPING,
            tol: tol::FIXED_POINT_RESIDUAL,
            max_iter: tol::FIXED_POINT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub x: DVector<f64>,
    /// ‖map(x) − x‖∞ at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Damped (Krasnosel'skii–Mann) iteration `x ← x + ω (map(x) − x)`.
///
/// Stops as soon as `‖map(x) − x‖∞ ≤ tol`; the starting point is returned
/// untouched if it already satisfies the tolerance.
pub fn fixed_point<F>(
    mut map: F,
    x0: DVector<f64>,
    opts: FixedPointOptions,
) -> Result<FixedPointSolution>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid(
            "damping",
            format!("must lie in (0, 1], got {}", opts.damping),
        ));
    }
    let mut x = x0;
    let mut residual = f64::INFINITY;
    for iterations in 0..=opts.max_iter {
        let mapped = map(&x);
        let step = mapped - &x;
        residual = step.amax();
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            return Ok(FixedPointSolution {
                x,
                residual,
                iterations,
            });
        }
        if iterations == opts.max_iter {
            break;
        }
        x.axpy(opts.damping, &step, 1.0);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
