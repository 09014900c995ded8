use nalgebra::{DMatrix, DVector};

use super::tol;
use crate::error::{Error, Result};

/// `maximize cᵀx  s.t.  A x = b,  lower ≤ x ≤ upper`.
///
/// Lower bounds must be finite; upper bounds may be `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LpProblem {
    pub fn new(
        objective: DVector<f64>,
        eq_matrix: DMatrix<f64>,
        eq_rhs: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self> {
        let n = objective.len();
        crate::error::check_dim(n, eq_matrix.ncols())?;
        crate::error::check_dim(eq_matrix.nrows(), eq_rhs.len())?;
        crate::error::check_dim(n, lower.len())?;
        crate::error::check_dim(n, upper.len())?;
        for j in 0..n {
            if !lower[j].is_finite() {
                return Err(Error::invalid("lower", format!("bound {j} is not finite")));
            }
            if !(lower[j] <= upper[j]) {
                return Err(Error::invalid(
                    "bounds",
                    format!("variable {j}: lower {} > upper {}", lower[j], upper[j]),
                ));
            }
        }
        Ok(Self {
            objective,
            eq_matrix,
            eq_rhs,
            lower,
            upper,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Basic feasible solution; meaningful only when `status` is `Optimal`.
    pub x: DVector<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const MAX_PIVOTS: usize = 100_000;

/// Dense tableau over the equality rows of the shifted problem `0 ≤ y ≤ u`.
///
/// Nonbasic columns sit at zero or at their upper bound; `value` holds the
/// current level of each basic variable.
struct Tableau {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
    value: Vec<f64>,
    /// Reduced costs.
    obj: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Columns that may never enter (artificials in phase 2).
    barred: Vec<bool>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

enum Blocker {
    /// The entering variable reaches its opposite bound.
    Flip,
    /// Basic variable in this row reaches zero (`false`) or its upper bound (`true`).
    Row(usize, bool),
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.cols + j]
    }

    /// Moves nonbasic column `e` by `delta` and updates basic levels.
    fn shift(&mut self, e: usize, delta: f64) {
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a != 0.0 {
                self.value[i] -= a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize, entering_level: f64, leaving_at_upper: bool) {
        let w = self.cols;
        let p = self.cells[r * w + e];
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[e] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.at_upper[leaving] = leaving_at_upper;
        self.is_basic[e] = true;
        self.at_upper[e] = false;
        self.basis[r] = e;
        self.value[r] = entering_level;
        self.pivots += 1;
    }

    /// Current level of nonbasic column `j`.
    fn nonbasic_level(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    /// Bounded primal simplex on the current reduced costs. Uses the largest
    /// improving reduced cost, falling back to Bland's rule during long
    /// degenerate streaks.
    fn optimize(&mut self) -> Result<Outcome> {
        let mut streak = 0;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::NonConvergence {
                    iterations: self.pivots,
                    residual: f64::NAN,
                });
            }
            let bland = streak >= tol::SIMPLEX_DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = tol::LP_OPTIMALITY;
            for j in 0..self.cols {
                if self.is_basic[j] || self.barred[j] {
                    continue;
                }
                // Increasing from zero or decreasing from the upper bound.
                let gain = if self.at_upper[j] { -self.obj[j] } else { self.obj[j] };
                if gain > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = gain;
                }
            }
            let Some(e) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.at_upper[e] { -1.0 } else { 1.0 };

            let mut limit = self.upper[e];
            let mut blocker = limit.is_finite().then_some(Blocker::Flip);
            let mut blocker_var = usize::MAX;
            for i in 0..self.rows {
                let a = dir * self.at(i, e);
                let (ratio, to_upper) = if a > tol::SIMPLEX_PIVOT {
                    (self.value[i].max(0.0) / a, false)
                } else if a < -tol::SIMPLEX_PIVOT && self.upper[self.basis[i]].is_finite() {
                    let room = (self.upper[self.basis[i]] - self.value[i]).max(0.0);
                    (room / -a, true)
                } else {
                    continue;
                };
                let tie = (ratio - limit).abs() <= 1e-12 * (1.0 + limit.abs());
                let better = match blocker {
                    None => true,
                    Some(_) if tie => self.basis[i] < blocker_var,
                    Some(_) => ratio < limit,
                };
                if better {
                    limit = ratio;
                    blocker = Some(Blocker::Row(i, to_upper));
                    blocker_var = self.basis[i];
                }
            }
            let Some(blocker) = blocker else {
                return Ok(Outcome::Unbounded);
            };
            if limit <= tol::LP_FEASIBILITY * 1e-3 {
                streak += 1;
            } else {
                streak = 0;
            }
            let delta = dir * limit;
            let start = self.nonbasic_level(e);
            self.shift(e, delta);
            match blocker {
                Blocker::Flip => {
                    self.at_upper[e] = !self.at_upper[e];
                    self.pivots += 1;
                }
                Blocker::Row(r, to_upper) => self.pivot(r, e, start + delta, to_upper),
            }
        }
    }
}

/// Two-phase bounded-variable dense simplex.
///
/// Variables are shifted to `y = x − lower`, so `0 ≤ y ≤ upper − lower`, and
/// finite upper bounds are handled by bound flips rather than extra rows.
/// Phase 1 minimizes the sum of artificials on the equality rows; phase 2
/// optimizes the real objective with artificials barred from re-entering.
pub fn simplex_solve(lp: &LpProblem) -> Result<LpSolution> {
    let n = lp.num_vars();
    let rows = lp.eq_matrix.nrows();
    let cols = n + rows;

    let mut cells = vec![0.0; rows * cols];
    let mut value = vec![0.0; rows];
    let shifted = &lp.eq_matrix * &lp.lower;
    for i in 0..rows {
        let r = lp.eq_rhs[i] - shifted[i];
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let row = &mut cells[i * cols..(i + 1) * cols];
        for j in 0..n {
            row[j] = sign * lp.eq_matrix[(i, j)];
        }
        row[n + i] = 1.0;
        value[i] = sign * r;
    }
    let mut upper: Vec<f64> = (0..n).map(|j| lp.upper[j] - lp.lower[j]).collect();
    upper.extend(std::iter::repeat(f64::INFINITY).take(rows));
    let mut is_basic = vec![false; cols];
    for flag in &mut is_basic[n..] {
        *flag = true;
    }

    // Phase 1: maximize −Σ artificials.
    let mut obj = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..n {
            obj[j] += cells[i * cols + j];
        }
    }
    let rhs_scale = 1.0 + value.iter().cloned().fold(0.0, f64::max);

    let mut t = Tableau {
        rows,
        cols,
        cells,
        value,
        obj,
        upper,
        at_upper: vec![false; cols],
        basis: (n..cols).collect(),
        is_basic,
        barred: vec![false; cols],
        pivots: 0,
    };

    if rows > 0 {
        t.optimize()?;
        let infeasibility: f64 = (0..rows)
            .filter(|&i| t.basis[i] >= n)
            .map(|i| t.value[i])
            .sum();
        if infeasibility > tol::LP_FEASIBILITY * rhs_scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: DVector::from_element(n, f64::NAN),
                objective: f64::NAN,
                pivots: t.pivots,
            });
        }
        // Drive zero-level artificials out of the basis where possible; a row
        // with no usable pivot is redundant and keeps its artificial at zero.
        for i in 0..rows {
            if t.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| !t.is_basic[j] && t.at(i, j).abs() > 1e-9) {
                    let level = t.nonbasic_level(j);
                    t.pivot(i, j, level, false);
                }
            }
        }
        for j in n..cols {
            t.barred[j] = true;
        }
    }

    // Phase 2 reduced costs from the current basis.
    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(lp.objective.as_slice());
    for i in 0..rows {
        let b = t.basis[i];
        let cb = if b < n { lp.objective[b] } else { 0.0 };
        if cb != 0.0 {
            let row = &t.cells[i * cols..(i + 1) * cols];
            for (o, v) in obj.iter_mut().zip(row) {
                *o -= cb * v;
            }
        }
    }
    for j in 0..cols {
        if t.is_basic[j] {
            obj[j] = 0.0;
        }
    }
    t.obj = obj;

    if let Outcome::Unbounded = t.optimize()? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: DVector::from_element(n, f64::NAN),
            objective: f64::INFINITY,
            pivots: t.pivots,
        });
    }

    let mut x = lp.lower.clone();
    for j in 0..n {
        if !t.is_basic[j] && t.at_upper[j] {
            x[j] = lp.upper[j];
        }
    }
    for i in 0..rows {
        let b = t.basis[i];
        if b < n {
            x[b] += t.value[i].clamp(0.0, t.upper[b]);
        }
    }
    let objective = lp.objective.dot(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        pivots: t.pivots,
    })
}
