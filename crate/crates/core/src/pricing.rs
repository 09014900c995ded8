//! Closed-form retail pricing against an affine demand model.
//!
//! With mean demand `d̄(π) = −Gπ + b̄` the expected consumer surplus is
//! `πᵀGπ/2 − πᵀb̄ + c` and the expected retail profit is `(π − λ̄)ᵀ d̄(π)`.
//! Maximizing `rp + η·cs` for `η ∈ [0, 1]` gives
//! `π*(η) = (λ̄ + (1 − η) G⁻¹b̄) / (2 − η)`, and the image of `η ↦ π*(η)` in
//! the (cs, rp) plane is the concave, decreasing Pareto front.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{AffineDemandModel, AffineResponse};
use crate::optim::{bisect_increasing, tol};
use crate::PriceVector;

/// Expected wholesale (plus delivery) cost per kWh in each hour.
#[derive(Debug, Clone, PartialEq)]
pub struct WholesaleCost {
    mean: DVector<f64>,
    samples: Option<Vec<DVector<f64>>>,
}

impl WholesaleCost {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("cost", "empty cost vector"));
        }
        if let Some(i) = mean.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid(
                "cost",
                format!("hour {} must be finite and positive, got {}", i + 1, mean[i]),
            ));
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            samples: None,
        })
    }

    /// Builds the cost from scenarios; the mean is their sample average.
    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::invalid("cost", "no samples"))?;
        let n = first.len();
        let mut mean = vec![0.0; n];
        for s in &samples {
            check_dim(n, s.len())?;
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= samples.len() as f64;
        }
        let mut cost = Self::new(mean)?;
        cost.samples = Some(samples.into_iter().map(DVector::from_vec).collect());
        Ok(cost)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn samples(&self) -> Option<&[DVector<f64>]> {
        self.samples.as_deref()
    }

    pub fn horizon(&self) -> usize {
        self.mean.len()
    }
}

/// One priced operating point in the (cs, rp) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub eta: f64,
    pub price: PriceVector,
    pub cs: f64,
    pub rp: f64,
    /// Always exactly `cs + rp`.
    pub sw: f64,
}

impl TradeoffPoint {
    pub fn new(eta: f64, price: PriceVector, cs: f64, rp: f64) -> Self {
        Self {
            eta,
            price,
            cs,
            rp,
            sw: cs + rp,
        }
    }
}

pub fn expected_cs<M: AffineResponse + ?Sized>(model: &M, pi: &PriceVector) -> Result<f64> {
    check_dim(model.horizon(), pi.len())?;
    let p = pi.as_vector();
    let g = model.gain();
    Ok(0.5 * p.dot(&(g * p)) - p.dot(model.intercept_mean()) + model.cs_constant())
}

pub fn expected_rp<M: AffineResponse + ?Sized>(
    model: &M,
    pi: &PriceVector,
    cost: &WholesaleCost,
) -> Result<f64> {
    check_dim(model.horizon(), pi.len())?;
    check_dim(model.horizon(), cost.horizon())?;
    let p = pi.as_vector();
    let demand = model.intercept_mean() - model.gain() * p;
    Ok((p - cost.mean()).dot(&demand))
}

pub fn expected_sw<M: AffineResponse + ?Sized>(
    model: &M,
    pi: &PriceVector,
    cost: &WholesaleCost,
) -> Result<f64> {
    Ok(expected_cs(model, pi)? + expected_rp(model, pi, cost)?)
}

/// Realized profit `(π − λ)ᵀ d` for one cost scenario and demand draw.
pub fn realized_rp(pi: &PriceVector, cost_sample: &DVector<f64>, demand: &DVector<f64>) -> Result<f64> {
    check_dim(pi.len(), cost_sample.len())?;
    check_dim(pi.len(), demand.len())?;
    Ok((pi.as_vector() - cost_sample).dot(demand))
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::invalid("eta", format!("must lie in [0, 1], got {eta}")))
    }
}

/// `π*(η)` for any `η < 2`; values above 1 trace the part of the frontier
/// with negative profit.
fn weighted_price(g_inv_b: &DVector<f64>, cost: &WholesaleCost, eta: f64) -> DVector<f64> {
    (cost.mean() + g_inv_b * (1.0 - eta)) / (2.0 - eta)
}

/// Price maximizing `rp + η·cs`.
pub fn optimal_price(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    eta: f64,
) -> Result<PriceVector> {
    check_eta(eta)?;
    check_dim(model.horizon(), cost.horizon())?;
    PriceVector::from_vector(weighted_price(&model.zero_demand_price(), cost, eta))
}

pub fn tradeoff_point(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    eta: f64,
) -> Result<TradeoffPoint> {
    let price = optimal_price(model, cost, eta)?;
    let cs = expected_cs(model, &price)?;
    let rp = expected_rp(model, &price, cost)?;
    Ok(TradeoffPoint::new(eta, price, cs, rp))
}

/// `points` evenly spaced weights on [0, 1], endpoints included.
pub fn eta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..points)
            .map(|k| k as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Default weight grid: 101 points.
pub fn default_eta_grid() -> Vec<f64> {
    eta_grid(101)
}

/// Front points for an ascending weight grid, in increasing-`cs` order.
pub fn pareto_front(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    eta_grid: &[f64],
) -> Result<Vec<TradeoffPoint>> {
    if eta_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("eta_grid", "must be sorted ascending"));
    }
    eta_grid
        .iter()
        .map(|&eta| tradeoff_point(model, cost, eta))
        .collect()
}

/// Outcome of maximizing profit under a consumer-surplus floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    pub price: PriceVector,
    pub cs: f64,
    pub rp: f64,
    /// Weight whose unconstrained optimum meets the floor.
    pub eta: f64,
    pub iterations: usize,
}

/// Maximizes expected profit subject to `cs ≥ tau`.
///
/// Uses the weighted/constrained equivalence: the binding solution is
/// `π*(η)` for the `η` with `cs(π*(η)) = tau`, found by bisection since
/// `cs(π*(η))` increases with `η`. A slack floor returns the profit maximizer.
pub fn constrained_optimal_price(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    tau: f64,
) -> Result<ConstrainedSolution> {
    check_dim(model.horizon(), cost.horizon())?;
    let g_inv_b = model.zero_demand_price();
    let cs_at = |eta: f64| -> f64 {
        let p = PriceVector::from_vector(weighted_price(&g_inv_b, cost, eta))
            .expect("weighted price is finite");
        expected_cs(model, &p).expect("dimensions checked")
    };
    let finish = |eta: f64, iterations: usize| -> Result<ConstrainedSolution> {
        let price = PriceVector::from_vector(weighted_price(&g_inv_b, cost, eta))?;
        Ok(ConstrainedSolution {
            cs: expected_cs(model, &price)?,
            rp: expected_rp(model, &price, cost)?,
            price,
            eta,
            iterations,
        })
    };

    let cs_min = cs_at(0.0);
    if tau <= cs_min {
        return finish(0.0, 0);
    }
    let cs_max = cs_at(1.0);
    let tol_abs = tol::BISECTION_REL * tau.abs().max(1.0);
    if tau > cs_max + tol_abs {
        return Err(Error::InfeasibleSurplusFloor { tau, max_cs: cs_max });
    }
    if tau >= cs_max {
        return finish(1.0, 0);
    }
    let b = bisect_increasing(cs_at, 0.0, 1.0, tau, tol_abs, tol::BISECTION_MAX_ITER)?;
    finish(b.x, b.iterations)
}

/// Upper envelope of achievable profit at surplus level `cs`: the largest
/// `rp` over all prices with `cs(π) ≥ cs`.
///
/// Along the weighted optimum, with `Q = hᵀGh`, `h = G⁻¹b̄ − λ̄` and
/// `y = 1/(2 − η)`, one has `cs − k = Q y²/2` and `rp = Q y (1 − y)`, where
/// `k = c − b̄ᵀG⁻¹b̄/2` is the surplus at the zero-demand price. Eliminating
/// `y` gives `rp = √(2Q(cs − k)) − 2(cs − k)` for `y ≥ 1/2`, and the profit
/// maximum `Q/4` for smaller surplus. Values of `y > 1` extend the envelope
/// past the social-welfare point into negative profit.
pub fn frontier_profit(model: &AffineDemandModel, cost: &WholesaleCost, cs: f64) -> Result<f64> {
    check_dim(model.horizon(), cost.horizon())?;
    let g_inv_b = model.zero_demand_price();
    let h = &g_inv_b - cost.mean();
    let q = h.dot(&(model.gain() * &h));
    let k = model.cs_constant() - 0.5 * model.intercept_mean().dot(&g_inv_b);
    let excess = cs - k;
    if excess <= q / 8.0 {
        return Ok(q / 4.0);
    }
    Ok((2.0 * q * excess).sqrt() - 2.0 * excess)
}

/// Simple retail tariffs used as baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BenchmarkScheme {
    /// Flat price `x` in every hour; the sweep parameter is `x`.
    Constant,
    /// Two-level tariff: `norm` off-peak and `ratio·norm` for clock hours in
    /// `[peak_start, peak_end)`; the sweep parameter is `norm`.
    TimeOfUse {
        ratio: f64,
        peak_start: usize,
        peak_end: usize,
    },
    /// `γ·λ̄` hour by hour; the sweep parameter is `γ`.
    ProportionalMarkup,
}

impl BenchmarkScheme {
    /// Time-of-use with a 20 % peak premium from 09:00 to 17:00.
    pub fn default_tou() -> Self {
        BenchmarkScheme::TimeOfUse {
            ratio: 1.2,
            peak_start: 9,
            peak_end: 17,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkScheme::Constant => "cp",
            BenchmarkScheme::TimeOfUse { .. } => "tou",
            BenchmarkScheme::ProportionalMarkup => "pmp",
        }
    }

    pub fn price(&self, param: f64, cost: &WholesaleCost) -> Result<PriceVector> {
        let n = cost.horizon();
        let v = match *self {
            BenchmarkScheme::Constant => vec![param; n],
            BenchmarkScheme::TimeOfUse {
                ratio,
                peak_start,
                peak_end,
            } => (0..n)
                .map(|h| {
                    if (peak_start..peak_end).contains(&h) {
                        ratio * param
                    } else {
                        param
                    }
                })
                .collect(),
            BenchmarkScheme::ProportionalMarkup => cost.mean().iter().map(|l| param * l).collect(),
        };
        PriceVector::with_horizon(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPoint {
    pub param: f64,
    pub price: PriceVector,
    pub cs: f64,
    pub rp: f64,
}

/// Evaluates a benchmark tariff at every sweep parameter.
pub fn benchmark_trace<M: AffineResponse + ?Sized>(
    model: &M,
    cost: &WholesaleCost,
    scheme: BenchmarkScheme,
    sweep: &[f64],
) -> Result<Vec<BenchmarkPoint>> {
    if sweep.is_empty() {
        return Err(Error::invalid("sweep", "grid must be non-empty"));
    }
    sweep
        .iter()
        .map(|&param| {
            let price = scheme.price(param, cost)?;
            Ok(BenchmarkPoint {
                param,
                cs: expected_cs(model, &price)?,
                rp: expected_rp(model, &price, cost)?,
                price,
            })
        })
        .collect()
}
