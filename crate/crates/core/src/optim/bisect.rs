use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Finds `x ∈ [lo, hi]` with `f(x) ≈ target` for a continuous non-decreasing `f`.
///
/// Requires `f(lo) ≤ target ≤ f(hi)`. Halves the bracket until it can no
/// longer shrink in floating point or `max_iter` is reached, then returns the
/// endpoint closer to the target; succeeds if that endpoint is within `tol`.
pub fn bisect_increasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Bisection>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !(f_lo <= target && target <= f_hi) {
        return Err(Error::invalid(
            "bracket",
            format!("target {target} not within [{f_lo}, {f_hi}]"),
        ));
    }
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid);
        if f_mid < target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let (x, value) = if (f_hi - target).abs() <= (target - f_lo).abs() {
        (hi, f_hi)
    } else {
        (lo, f_lo)
    };
    if (value - target).abs() <= tol {
        Ok(Bisection {
            x,
            value,
            iterations,
        })
    } else {
        Err(Error::NonConvergence {
            iterations,
            residual: (value - target).abs(),
        })
    }
}
