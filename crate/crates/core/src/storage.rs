//! Consumer-side batteries under net metering.
//!
//! A battery owner buys and sells at the retail price, so battery use is an
//! energy-arbitrage linear program that is independent of HVAC control.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{AffineDemandModel, AffineResponse};
use crate::optim::{pattern_search, simplex_solve, tol, LpProblem, LpStatus, PatternSearchOptions};
use crate::pricing::{self, TradeoffPoint, WholesaleCost};
use crate::PriceVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryParams {
    /// kWh.
    pub capacity: f64,
    /// State of charge at the start and end of the day, kWh.
    pub initial: f64,
    pub storage_eff: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    /// kWh per hour.
    pub charge_limit: f64,
    /// kWh per hour.
    pub discharge_limit: f64,
}

impl BatteryParams {
    pub fn lossless(capacity: f64, initial: f64, limit: f64) -> Self {
        Self {
            capacity,
            initial,
            storage_eff: 1.0,
            charge_eff: 1.0,
            discharge_eff: 1.0,
            charge_limit: limit,
            discharge_limit: limit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("capacity", self.capacity),
            ("charge_limit", self.charge_limit),
            ("discharge_limit", self.discharge_limit),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.initial >= 0.0 && self.initial <= self.capacity) {
            return Err(Error::invalid(
                "initial",
                format!("must lie in [0, {}], got {}", self.capacity, self.initial),
            ));
        }
        let effs = [
            ("storage_eff", self.storage_eff),
            ("charge_eff", self.charge_eff),
            ("discharge_eff", self.discharge_eff),
        ];
        for (name, v) in effs {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Product of the three efficiencies.
    pub fn round_trip(&self) -> f64 {
        self.storage_eff * self.charge_eff * self.discharge_eff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitragePlan {
    /// Energy bought for charging in each hour.
    pub charge: DVector<f64>,
    /// Energy sold from discharging in each hour.
    pub discharge: DVector<f64>,
    /// State of charge at the end of each hour.
    pub soc: DVector<f64>,
    /// `−πᵀ(r⁺ − r⁻)`.
    pub profit: f64,
}

impl ArbitragePlan {
    /// Idle battery over `horizon` hours.
    pub fn idle(bat: &BatteryParams, horizon: usize) -> Self {
        Self {
            charge: DVector::zeros(horizon),
            discharge: DVector::zeros(horizon),
            soc: DVector::from_element(horizon, bat.initial),
            profit: 0.0,
        }
    }

    /// Net energy drawn from the grid, `r⁺ − r⁻`.
    pub fn net_charge(&self) -> DVector<f64> {
        &self.charge - &self.discharge
    }

    /// Largest violation of the dynamics, terminal, and box constraints.
    pub fn max_violation(&self, bat: &BatteryParams) -> f64 {
        let n = self.charge.len();
        let mut worst: f64 = 0.0;
        let mut prev = bat.initial;
        for i in 0..n {
            let next = bat.storage_eff
                * (prev + bat.charge_eff * self.charge[i] - self.discharge[i] / bat.discharge_eff);
            worst = worst.max((self.soc[i] - next).abs());
            worst = worst.max(box_violation(self.soc[i], 0.0, bat.capacity));
            worst = worst.max(box_violation(self.charge[i], 0.0, bat.charge_limit));
            worst = worst.max(box_violation(self.discharge[i], 0.0, bat.discharge_limit));
            prev = self.soc[i];
        }
        if n > 0 {
            worst = worst.max((self.soc[n - 1] - bat.initial).abs());
        }
        worst
    }
}

fn box_violation(v: f64, lo: f64, hi: f64) -> f64 {
    (lo - v).max(v - hi).max(0.0)
}

/// Profit-maximizing battery schedule at retail prices `pi`.
///
/// Variables are `[r⁺; r⁻; B_1..B_N]` with one equality row per hour for the
/// charge dynamics and one for `B_N = B_0`. A battery that leaks
/// (`storage_eff < 1`) cannot hold a positive initial charge through the day
/// without recharging; if the rate limits make that impossible the program
/// is infeasible and [`Error::Infeasible`] is returned.
pub fn arbitrage(pi: &PriceVector, bat: &BatteryParams) -> Result<ArbitragePlan> {
    bat.validate()?;
    let n = pi.len();
    if bat.capacity == 0.0 && bat.initial == 0.0 && !pi.as_slice().iter().any(|p| *p < 0.0) {
        return Ok(ArbitragePlan::idle(bat, n));
    }
    let kappa = bat.storage_eff;
    let vars = 3 * n;
    let mut a = DMatrix::zeros(n + 1, vars);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        a[(i, i)] = -kappa * bat.charge_eff;
        a[(i, n + i)] = kappa / bat.discharge_eff;
        a[(i, 2 * n + i)] = 1.0;
        if i == 0 {
            rhs[i] = kappa * bat.initial;
        } else {
            a[(i, 2 * n + i - 1)] = -kappa;
        }
    }
    a[(n, 3 * n - 1)] = 1.0;
    rhs[n] = bat.initial;

    let mut objective = DVector::zeros(vars);
    let mut upper = DVector::zeros(vars);
    for i in 0..n {
        objective[i] = -pi[i];
        objective[n + i] = pi[i];
        upper[i] = bat.charge_limit;
        upper[n + i] = bat.discharge_limit;
        upper[2 * n + i] = bat.capacity;
    }
    let lp = LpProblem::new(objective, a, rhs, DVector::zeros(vars), upper)?;
    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "battery cannot return to its initial charge {} within the rate limits",
                bat.initial
            )))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let charge = sol.x.rows(0, n).map(|v| v.clamp(0.0, bat.charge_limit));
    let discharge = sol.x.rows(n, n).map(|v| v.clamp(0.0, bat.discharge_limit));
    let soc = sol.x.rows(2 * n, n).map(|v| v.clamp(0.0, bat.capacity));
    let profit = -pi.as_vector().dot(&(&charge - &discharge));
    Ok(ArbitragePlan {
        charge,
        discharge,
        soc,
        profit,
    })
}

/// Expected surplus of one consumer who also owns `bat`.
pub fn consumer_surplus_with_storage<M: AffineResponse + ?Sized>(
    model_j: &M,
    pi: &PriceVector,
    bat: &BatteryParams,
) -> Result<f64> {
    Ok(pricing::expected_cs(model_j, pi)? + arbitrage(pi, bat)?.profit)
}

/// `count` identical batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryGroup {
    pub params: BatteryParams,
    pub count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatteryPopulation {
    pub groups: Vec<BatteryGroup>,
}

impl BatteryPopulation {
    pub fn new(groups: Vec<BatteryGroup>) -> Result<Self> {
        for g in &groups {
            g.params.validate()?;
        }
        Ok(Self { groups })
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.count == 0)
    }

    pub fn total_count(&self) -> u64 {
        self.groups.iter().map(|g| u64::from(g.count)).sum()
    }
}

/// Aggregate arbitrage response of a battery population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationResponse {
    /// Summed `r⁺ − r⁻`.
    pub net_charge: DVector<f64>,
    /// Summed `Σ_i (r⁺_i + r⁻_i)`.
    pub volume: f64,
    /// Summed arbitrage profit.
    pub profit: f64,
}

pub fn population_response(pi: &PriceVector, population: &BatteryPopulation) -> Result<PopulationResponse> {
    let n = pi.len();
    let mut out = PopulationResponse {
        net_charge: DVector::zeros(n),
        volume: 0.0,
        profit: 0.0,
    };
    for g in population.groups.iter().filter(|g| g.count > 0) {
        let plan = arbitrage(pi, &g.params)?;
        let k = f64::from(g.count);
        out.net_charge += plan.net_charge() * k;
        out.volume += (plan.charge.sum() + plan.discharge.sum()) * k;
        out.profit += plan.profit * k;
    }
    Ok(out)
}

/// `net_charge` of [`population_response`].
pub fn net_charge(pi: &PriceVector, population: &BatteryPopulation) -> Result<DVector<f64>> {
    Ok(population_response(pi, population)?.net_charge)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageEvaluation {
    /// `rp + η·cs` including the arbitrage response.
    pub objective: f64,
    /// Expected consumer surplus with arbitrage profit, `cs̄ − πᵀr`.
    pub cs: f64,
    /// Expected retailer profit with battery flows, `rp̄ + (π − λ̄)ᵀr`.
    pub rp: f64,
    pub arbitrage_volume: f64,
}

pub fn evaluate_with_storage(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    population: &BatteryPopulation,
    pi: &PriceVector,
    eta: f64,
) -> Result<StorageEvaluation> {
    let resp = population_response(pi, population)?;
    let cs = pricing::expected_cs(model, pi)? - pi.as_vector().dot(&resp.net_charge);
    let rp = pricing::expected_rp(model, pi, cost)?
        + (pi.as_vector() - cost.mean()).dot(&resp.net_charge);
    Ok(StorageEvaluation {
        objective: rp + eta * cs,
        cs,
        rp,
        arbitrage_volume: resp.volume,
    })
}

/// `rp̄(π) + (π − λ̄)ᵀr(π) + η(cs̄(π) − πᵀr(π))`.
pub fn retailer_objective_with_storage(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    population: &BatteryPopulation,
    pi: &PriceVector,
    eta: f64,
) -> Result<f64> {
    Ok(evaluate_with_storage(model, cost, population, pi, eta)?.objective)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSearchOptions {
    /// Initial step as a fraction of the mean absolute seed price.
    pub step_rel: f64,
    /// Final step as a fraction of the mean absolute seed price.
    pub step_min_rel: f64,
    /// Objective evaluations allowed per start.
    pub max_evals: usize,
}

impl Default for StorageSearchOptions {
    fn default() -> Self {
        Self {
            step_rel: 0.05,
            step_min_rel: 1e-6,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStart {
    pub start: PriceVector,
    pub price: PriceVector,
    pub objective: f64,
    pub evaluations: usize,
    pub moves: usize,
    /// Objective after each accepted move.
    pub trace: Vec<f64>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageOptimum {
    pub point: TradeoffPoint,
    pub objective: f64,
    pub arbitrage_volume: f64,
    /// Objective at the storage-free optimal price.
    pub seed_objective: f64,
    /// False when no start beat the seed and the seed price was returned.
    pub improved: bool,
    pub starts: Vec<SearchStart>,
}

/// Best price found for the storage-aware weighted objective.
///
/// Compass search runs from the storage-free optimum, from `λ̄`, and from
/// their midpoint. Another start replaces the seed only if it beats it by
/// more than the search's improvement threshold, so a population that never
/// trades returns the storage-free price unchanged.
pub fn optimize_price_with_storage(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    population: &BatteryPopulation,
    eta: f64,
    opts: StorageSearchOptions,
) -> Result<StorageOptimum> {
    let seed = pricing::optimal_price(model, cost, eta)?;
    let seed_eval = evaluate_with_storage(model, cost, population, &seed, eta)?;
    let n = seed.len();
    let scale = seed.as_slice().iter().map(|p| p.abs()).sum::<f64>() / n as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let search = PatternSearchOptions {
        step0: opts.step_rel * scale,
        step_min: opts.step_min_rel * scale,
        max_evals: opts.max_evals,
    };

    let mid = PriceVector::from_vector((seed.as_vector() + cost.mean()) * 0.5)?;
    let mut starts = vec![seed.clone()];
    for cand in [PriceVector::from_vector(cost.mean().clone())?, mid] {
        if !starts.contains(&cand) {
            starts.push(cand);
        }
    }

    let runs = starts
        .par_iter()
        .map(|start| run_start(model, cost, population, eta, start, search))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (k, run) in runs.iter().enumerate().skip(1) {
        let incumbent = runs[best].objective;
        let threshold = tol::PATTERN_IMPROVEMENT * (1.0 + incumbent.abs());
        if run.objective > incumbent + threshold {
            best = k;
        }
    }
    let improved = runs[best].objective
        > seed_eval.objective + tol::PATTERN_IMPROVEMENT * (1.0 + seed_eval.objective.abs());
    let (price, eval) = if improved {
        let price = runs[best].price.clone();
        let eval = evaluate_with_storage(model, cost, population, &price, eta)?;
        (price, eval)
    } else {
        (seed, seed_eval.clone())
    };
    Ok(StorageOptimum {
        point: TradeoffPoint::new(eta, price, eval.cs, eval.rp),
        objective: eval.objective,
        arbitrage_volume: eval.arbitrage_volume,
        seed_objective: seed_eval.objective,
        improved,
        starts: runs,
    })
}

fn run_start(
    model: &AffineDemandModel,
    cost: &WholesaleCost,
    population: &BatteryPopulation,
    eta: f64,
    start: &PriceVector,
    opts: PatternSearchOptions,
) -> Result<SearchStart> {
    let mut failure = None;
    let objective = |x: &[f64]| -> f64 {
        let eval = PriceVector::from_vector(DVector::from_column_slice(x))
            .and_then(|p| retailer_objective_with_storage(model, cost, population, &p, eta));
        match eval {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };
    let res = pattern_search(objective, start.as_slice(), opts)?;
    if let Some(e) = failure {
        if !res.value.is_finite() {
            return Err(e);
        }
    }
    check_dim(start.len(), res.x.len())?;
    Ok(SearchStart {
        start: start.clone(),
        price: PriceVector::from_vector(DVector::from_vec(res.x))?,
        objective: res.value,
        evaluations: res.evaluations,
        moves: res.moves,
        trace: res.trace,
        truncated: res.truncated,
    })
}
