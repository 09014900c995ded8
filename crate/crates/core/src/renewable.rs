//! Retail pricing with retailer-owned renewable supply.
//!
//! Each hour the retailer can draw up to `q_i ~ Uniform[0, K]` of renewable
//! energy at marginal cost `ν_i` and buys the shortfall `(d_i − q_i)⁺` at
//! `λ̄_i`; any excess is spilled at no cost. Demand enters at its mean.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{AffineDemandModel, AffineResponse};
use crate::optim::{fixed_point, tol, FixedPointOptions};
use crate::pricing::{self, TradeoffPoint, WholesaleCost};
use crate::PriceVector;

#[derive(Debug, Clone, PartialEq)]
pub struct RenewableModel {
    capacity: f64,
    marginal_cost: DVector<f64>,
}

impl RenewableModel {
    /// `capacity` is the upper end `K` of the hourly availability law.
    pub fn new(capacity: f64, marginal_cost: Vec<f64>) -> Result<Self> {
        if !(capacity >= 0.0 && capacity.is_finite()) {
            return Err(Error::invalid(
                "capacity",
                format!("must be finite and >= 0, got {capacity}"),
            ));
        }
        if marginal_cost.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("marginal_cost", "entries must be finite"));
        }
        Ok(Self {
            capacity,
            marginal_cost: DVector::from_vec(marginal_cost),
        })
    }

    /// Renewable supply with zero marginal cost.
    pub fn free(capacity: f64, horizon: usize) -> Result<Self> {
        Self::new(capacity, vec![0.0; horizon])
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn marginal_cost(&self) -> &DVector<f64> {
        &self.marginal_cost
    }

    /// `λ̄ − ν`, which must be positive in every hour.
    fn cost_spread(&self, cost: &WholesaleCost) -> Result<DVector<f64>> {
        check_dim(cost.horizon(), self.marginal_cost.len())?;
        let spread = cost.mean() - &self.marginal_cost;
        if let Some(i) = spread.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::invalid(
                "marginal_cost",
                format!(
                    "hour {}: renewable cost {} must be below wholesale cost {}",
                    i + 1,
                    self.marginal_cost[i],
                    cost.mean()[i]
                ),
            ));
        }
        Ok(spread)
    }

    /// `P(q ≤ d)` for `q ~ Uniform[0, K]`.
    pub fn availability_cdf(&self, demand: f64) -> f64 {
        if self.capacity == 0.0 {
            return if demand >= 0.0 { 1.0 } else { 0.0 };
        }
        (demand / self.capacity).clamp(0.0, 1.0)
    }

    /// `E[(d − q)⁺]` for `q ~ Uniform[0, K]`.
    pub fn expected_shortfall(&self, demand: f64) -> f64 {
        let k = self.capacity;
        if demand <= 0.0 {
            0.0
        } else if demand <= k {
            demand * demand / (2.0 * k)
        } else {
            demand - k / 2.0
        }
    }
}

/// Expected profit `(π − ν)ᵀd̄ − Σ (λ̄_i − ν_i) E[(d̄_i − q_i)⁺]`.
///
/// With `K = 0` there is no renewable supply and this is exactly
/// [`pricing::expected_rp`].
pub fn expected_rp_renewable<M: AffineResponse + ?Sized>(
    model: &M,
    pi: &PriceVector,
    cost: &WholesaleCost,
    renew: &RenewableModel,
) -> Result<f64> {
    let spread = renew.cost_spread(cost)?;
    if renew.capacity == 0.0 {
        return pricing::expected_rp(model, pi, cost);
    }
    check_dim(model.horizon(), pi.len())?;
    check_dim(model.horizon(), cost.horizon())?;
    let p = pi.as_vector();
    let demand = model.intercept_mean() - model.gain() * p;
    let shortfall: f64 = demand
        .iter()
        .zip(spread.iter())
        .map(|(d, s)| s * renew.expected_shortfall(*d))
        .sum();
    Ok((p - renew.marginal_cost()).dot(&demand) - shortfall)
}

/// First-order residual `b̄ − Gν − (2−η) d − G((λ̄ − ν) ∘ F(d))` of the
/// weighted objective written in terms of mean demand `d`.
pub fn first_order_residual(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    renew: &RenewableModel,
    eta: f64,
    demand: &DVector<f64>,
) -> Result<DVector<f64>> {
    let spread = renew.cost_spread(cost)?;
    check_dim(model.horizon(), demand.len())?;
    Ok(residual_with_spread(model, renew, &spread, eta, demand))
}

fn residual_with_spread(
    model: &AffineDemandModel,
    renew: &RenewableModel,
    spread: &DVector<f64>,
    eta: f64,
    demand: &DVector<f64>,
) -> DVector<f64> {
    let g = model.gain();
    let served = DVector::from_iterator(
        demand.len(),
        demand
            .iter()
            .zip(spread.iter())
            .map(|(d, s)| s * renew.availability_cdf(*d)),
    );
    model.intercept_mean() - g * renew.marginal_cost() - demand * (2.0 - eta) - g * served
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewableOptimum {
    pub price: PriceVector,
    /// Mean demand at `price`.
    pub demand: DVector<f64>,
    /// ∞-norm of the first-order residual at `demand`.
    pub residual: f64,
    pub iterations: usize,
}

/// Price maximizing `rp_renewable + η·cs`.
///
/// The optimal mean demand solves the first-order condition, found by damped
/// iteration on `d ← (b̄ − Gν − G((λ̄−ν)∘F(d))) / (2−η)` from the
/// no-renewable optimum. This is preconditioned gradient ascent on a strongly
/// concave objective; the damping is capped at `1/(1 + L/(2−η))` with
/// `L = ‖G‖∞ max(λ̄−ν) / K` so every step contracts. When the capacity is
/// below every hour of the no-renewable optimal demand, renewables are fully
/// used at that demand and the no-renewable price is returned unchanged.
pub fn optimal_price_renewable(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    renew: &RenewableModel,
    eta: f64,
) -> Result<RenewableOptimum> {
    let spread = renew.cost_spread(cost)?;
    let base_price = pricing::optimal_price(model, cost, eta)?;
    let base_demand = model.mean_demand(&base_price)?.values;
    let min_demand = base_demand.min();
    if renew.capacity == 0.0 || renew.capacity <= min_demand {
        let residual = residual_with_spread(model, renew, &spread, eta, &base_demand).amax();
        return Ok(RenewableOptimum {
            price: base_price,
            demand: base_demand,
            residual,
            iterations: 0,
        });
    }

    let g = model.gain();
    let scale = 2.0 - eta;
    let lipschitz = g.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max) * spread.max()
        / renew.capacity;
    let damping = tol::FIXED_POINT_DAMPING.min(1.0 / (1.0 + lipschitz / scale));
    let opts = FixedPointOptions {
        damping,
        tol: tol::FIXED_POINT_RESIDUAL,
        max_iter: tol::FIXED_POINT_MAX_ITER,
    };
    let map = |d: &DVector<f64>| -> DVector<f64> {
        d + residual_with_spread(model, renew, &spread, eta, d) / scale
    };
    let sol = fixed_point(map, base_demand, opts)?;
    let price = PriceVector::from_vector(model.solve(&(model.intercept_mean() - &sol.x))?)?;
    let residual = residual_with_spread(model, renew, &spread, eta, &sol.x).amax();
    Ok(RenewableOptimum {
        price,
        demand: sol.x,
        residual,
        iterations: sol.iterations,
    })
}

/// How the gain from renewables splits between consumers and retailer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitSplit {
    pub delta_cs: f64,
    pub delta_rp: f64,
    /// `delta_cs / (delta_cs + delta_rp)`, or zero when there is no gain.
    pub fraction: f64,
}

/// Surplus and profit gains from renewables, each regime at its own optimal
/// price for the same `η`.
pub fn benefit_split(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    renew: &RenewableModel,
    eta: f64,
) -> Result<BenefitSplit> {
    let plain = pricing::optimal_price(model, cost, eta)?;
    let with = optimal_price_renewable(model, cost, renew, eta)?;
    let delta_cs = pricing::expected_cs(model, &with.price)? - pricing::expected_cs(model, &plain)?;
    let delta_rp = expected_rp_renewable(model, &with.price, cost, renew)?
        - pricing::expected_rp(model, &plain, cost)?;
    let total = delta_cs + delta_rp;
    let fraction = if total > 0.0 { delta_cs / total } else { 0.0 };
    Ok(BenefitSplit {
        delta_cs,
        delta_rp,
        fraction,
    })
}

/// Trade-off front with renewables: `rp` is the renewable-aware profit.
pub fn renewable_front(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    renew: &RenewableModel,
    eta_grid: &[f64],
) -> Result<Vec<TradeoffPoint>> {
    eta_grid
        .iter()
        .map(|&eta| {
            let opt = optimal_price_renewable(model, cost, renew, eta)?;
            let cs = pricing::expected_cs(model, &opt.price)?;
            let rp = expected_rp_renewable(model, &opt.price, cost, renew)?;
            Ok(TradeoffPoint::new(eta, opt.price, cs, rp))
        })
        .collect()
}
