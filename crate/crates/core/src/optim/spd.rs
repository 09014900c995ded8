use nalgebra::{DMatrix, DVector};

use super::tol;
use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive-definite matrix, `A = L Lᵀ`.
///
/// Factorization doubles as the positive-definiteness test: a non-positive
/// pivot is reported as [`Error::NotPositiveDefinite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    lower: DMatrix<f64>,
}

impl SpdFactorization {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > tol::SPD_MIN_PIVOT * scale) {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Solves `A x = rhs` by forward then backward substitution.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        crate::error::check_dim(n, rhs.len())?;
        let l = &self.lower;
        let mut y = rhs.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }

    /// `xᵀ A⁻¹ x`, computed as ‖L⁻¹x‖².
    pub fn inverse_quadratic_form(&self, x: &DVector<f64>) -> Result<f64> {
        let n = self.dim();
        crate::error::check_dim(n, x.len())?;
        let l = &self.lower;
        let mut y = x.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y.norm_squared())
    }
}
