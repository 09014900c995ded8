use std::fmt;
use std::ops::Index;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::HORIZON;

/// Hourly retail prices in $/kWh.
///
/// A production price vector always has [`HORIZON`] entries. Shorter toy
/// horizons (1 to 23 hours) can be built with [`PriceVector::with_horizon`]
/// for small-scale checks; the price after the last hour is taken as zero by
/// the consumer policy and is never stored.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriceVector(DVector<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.len() != HORIZON {
            return Err(Error::DimensionMismatch {
                expected: HORIZON,
                found: prices.len(),
            });
        }
        Self::with_horizon(prices)
    }

    /// Accepts any horizon between 1 and [`HORIZON`] hours.
    pub fn with_horizon(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() || prices.len() > HORIZON {
            return Err(Error::invalid(
                "prices",
                format!("horizon must be 1..={HORIZON}, got {}", prices.len()),
            ));
        }
        if let Some(i) = prices.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid("prices", format!("hour {} is not finite", i + 1)));
        }
        Ok(Self(DVector::from_vec(prices)))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        Self::with_horizon(v.as_slice().to_vec())
    }

    pub fn constant(horizon: usize, value: f64) -> Result<Self> {
        Self::with_horizon(vec![value; horizon])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// Price of hour `i` (0-based), zero past the end of the horizon.
    pub fn get_or_zero(&self, i: usize) -> f64 {
        self.0.get(i).copied().unwrap_or(0.0)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }
}

impl Index<usize> for PriceVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PriceVector").field(&self.0.as_slice()).finish()
    }
}

impl TryFrom<Vec<f64>> for PriceVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::with_horizon(v)
    }
}

impl From<PriceVector> for Vec<f64> {
    fn from(p: PriceVector) -> Self {
        p.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_vector_needs_full_day() {
        assert!(PriceVector::new(vec![0.1; 24]).is_ok());
        assert_eq!(
            PriceVector::new(vec![0.1; 23]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 24,
                found: 23
            }
        );
    }

    #[test]
    fn rejects_non_finite() {
        let mut v = vec![0.1; 24];
        v[5] = f64::NAN;
        assert!(PriceVector::new(v).is_err());
        assert!(PriceVector::with_horizon(vec![]).is_err());
        assert!(PriceVector::with_horizon(vec![0.0; 25]).is_err());
    }

    #[test]
    fn next_hour_past_horizon_is_zero() {
        let p = PriceVector::with_horizon(vec![0.1, 0.2]).unwrap();
        assert_eq!(p.get_or_zero(1), 0.2);
        assert_eq!(p.get_or_zero(2), 0.0);
    }
}
