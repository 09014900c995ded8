//! Monte Carlo consumer simulator.
//!
//! Each simulated day draws process and measurement noise, filters the indoor
//! temperature with a scalar Kalman filter and applies either the optimal
//! price-aware control or a price-blind thermostat. Outdoor temperature
//! follows the forecast exactly, so the outdoor prediction is the forecast
//! itself and outdoor readings add no information.
//!
//! Randomness is keyed by `(seed, replicate)` with one ChaCha stream per
//! consumer id, so any replicate of any consumer can be reproduced alone and
//! parallel runs are order-independent.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::ConsumerParams;
use crate::PriceVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub indoor_temp: f64,
    pub outdoor_temp: f64,
    /// 0-based hour of the day this state belongs to.
    pub hour: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    /// Filtered indoor temperature `x̂_{i|i}`.
    pub indoor_est: f64,
    /// Posterior variance of `indoor_est`.
    pub indoor_var: f64,
    /// Outdoor temperature predicted for the next hour.
    pub outdoor_pred: f64,
}

/// Noisy reading of indoor and outdoor temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub indoor: f64,
    pub outdoor: f64,
}

/// Realized outcome of one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    /// Hourly HVAC energy in kWh.
    pub consumption: Vec<f64>,
    pub indoor_temp: Vec<f64>,
    /// `πᵀp` in $.
    pub payment: f64,
    /// `μ Σ (x_i − t_i)²` in $.
    pub discomfort: f64,
    /// Always exactly `−discomfort − payment`.
    pub surplus: f64,
}

impl DayResult {
    fn settle(consumption: Vec<f64>, indoor_temp: Vec<f64>, pi: &PriceVector, params: &ConsumerParams) -> Self {
        let payment: f64 = consumption.iter().zip(pi.as_slice()).map(|(p, c)| p * c).sum();
        let discomfort = params.mu
            * indoor_temp
                .iter()
                .zip(&params.desired_temp)
                .map(|(x, t)| (x - t) * (x - t))
                .sum::<f64>();
        Self {
            consumption,
            indoor_temp,
            payment,
            discomfort,
            surplus: -discomfort - payment,
        }
    }
}

/// Random-stream key for one simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimSeed {
    pub seed: u64,
    pub replicate: u64,
    pub consumer: u64,
}

impl SimSeed {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            replicate: 0,
            consumer: 0,
        }
    }

    pub fn replicate(self, replicate: u64) -> Self {
        Self { replicate, ..self }
    }

    pub fn consumer(self, consumer: u64) -> Self {
        Self { consumer, ..self }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.replicate.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.consumer);
        rng
    }
}

impl From<u64> for SimSeed {
    fn from(seed: u64) -> Self {
        Self::new(seed)
    }
}

/// One predict/update cycle of the indoor-temperature filter.
///
/// Predicts hour `i` from the estimate of hour `i−1`, the power applied in
/// hour `i` and `est.outdoor_pred`, then folds in `obs.indoor`.
/// `next_outdoor_forecast` becomes the outdoor prediction for hour `i+1`.
pub fn kalman_step(
    est: &EstimatorState,
    obs: Observation,
    params: &ConsumerParams,
    applied_power: f64,
    next_outdoor_forecast: f64,
) -> EstimatorState {
    let keep = 1.0 - params.alpha;
    let prior_mean =
        keep * est.indoor_est + params.alpha * est.outdoor_pred - params.beta * applied_power;
    let prior_var = keep * keep * est.indoor_var + params.process_noise_var;
    let denom = prior_var + params.obs_noise_var;
    let gain = if denom > 0.0 { prior_var / denom } else { 1.0 };
    EstimatorState {
        indoor_est: prior_mean + gain * (obs.indoor - prior_mean),
        indoor_var: (1.0 - gain) * prior_var,
        outdoor_pred: next_outdoor_forecast,
    }
}

/// Power that steers the expected indoor temperature of hour `hour` to `target`.
fn power_for_target(est: &EstimatorState, params: &ConsumerParams, target: f64) -> f64 {
    ((1.0 - params.alpha) * est.indoor_est + params.alpha * est.outdoor_pred - target) / params.beta
}

/// Optimal price-aware control for hour `hour` (0-based) given the estimate
/// of the previous hour.
pub fn optimal_policy_step(
    est: &EstimatorState,
    pi: &PriceVector,
    hour: usize,
    params: &ConsumerParams,
) -> f64 {
    power_for_target(est, params, params.target_temperature(pi, hour))
}

fn check_inputs(params: &ConsumerParams, pi: &PriceVector, weather: &[f64]) -> Result<()> {
    params.validate()?;
    check_dim(params.horizon(), pi.len())?;
    check_dim(params.horizon(), weather.len())?;
    if weather.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("weather", "entries must be finite"));
    }
    Ok(())
}

fn rollout<F>(params: &ConsumerParams, weather: &[f64], seed: SimSeed, mut control: F) -> (Vec<f64>, Vec<f64>)
where
    F: FnMut(&EstimatorState, usize) -> f64,
{
    let n = params.horizon();
    let mut rng = seed.rng();
    let w_sd = params.process_noise_var.sqrt();
    let v_sd = params.obs_noise_var.sqrt();
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let mut state = ThermalState {
        indoor_temp: params.initial_temp(),
        outdoor_temp: weather[0],
        hour: 0,
    };
    let mut est = EstimatorState {
        indoor_est: state.indoor_temp + v_sd * normal(),
        indoor_var: params.obs_noise_var,
        outdoor_pred: weather[0],
    };

    let mut consumption = Vec::with_capacity(n);
    let mut indoor = Vec::with_capacity(n);
    for i in 0..n {
        let p = control(&est, i);
        state = ThermalState {
            indoor_temp: state.indoor_temp + params.alpha * (weather[i] - state.indoor_temp)
                - params.beta * p
                + w_sd * normal(),
            outdoor_temp: weather[i],
            hour: i,
        };
        let obs = Observation {
            indoor: state.indoor_temp + v_sd * normal(),
            outdoor: state.outdoor_temp + v_sd * normal(),
        };
        let next_forecast = weather.get(i + 1).copied().unwrap_or(weather[i]);
        est = kalman_step(&est, obs, params, p, next_forecast);
        consumption.push(p);
        indoor.push(state.indoor_temp);
    }
    (consumption, indoor)
}

/// Simulates one day under the optimal demand-response policy.
pub fn simulate_day(
    params: &ConsumerParams,
    pi: &PriceVector,
    weather: &[f64],
    seed: impl Into<SimSeed>,
) -> Result<DayResult> {
    check_inputs(params, pi, weather)?;
    let (consumption, indoor) = rollout(params, weather, seed.into(), |est, i| {
        optimal_policy_step(est, pi, i, params)
    });
    Ok(DayResult::settle(consumption, indoor, pi, params))
}

/// Simulates one day under a price-blind thermostat that steers the expected
/// indoor temperature to the setpoint offset by `tolerance` in the
/// energy-saving direction (warmer when cooling, cooler when heating).
pub fn baseline_thermostat(
    params: &ConsumerParams,
    tolerance: f64,
    pi: &PriceVector,
    weather: &[f64],
    seed: impl Into<SimSeed>,
) -> Result<DayResult> {
    check_inputs(params, pi, weather)?;
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::invalid("tolerance", format!("must be >= 0, got {tolerance}")));
    }
    let offset = tolerance * params.beta.signum();
    let (consumption, indoor) = rollout(params, weather, seed.into(), |est, i| {
        power_for_target(est, params, params.desired_temp[i] + offset)
    });
    Ok(DayResult::settle(consumption, indoor, pi, params))
}

/// Which controller a Monte Carlo run uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    Optimal,
    Thermostat { tolerance: f64 },
}

/// Sample means and standard errors over simulated days.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub replications: u64,
    pub mean_consumption: DVector<f64>,
    pub se_consumption: DVector<f64>,
    pub mean_payment: f64,
    pub mean_discomfort: f64,
    pub mean_surplus: f64,
    pub se_surplus: f64,
}

#[derive(Clone)]
struct Moments {
    count: u64,
    sum_p: Vec<f64>,
    sum_p2: Vec<f64>,
    payment: f64,
    discomfort: f64,
    surplus: f64,
    surplus2: f64,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            sum_p: vec![0.0; n],
            sum_p2: vec![0.0; n],
            payment: 0.0,
            discomfort: 0.0,
            surplus: 0.0,
            surplus2: 0.0,
        }
    }

    fn add(&mut self, day: &DayResult) {
        self.count += 1;
        for (i, p) in day.consumption.iter().enumerate() {
            self.sum_p[i] += p;
            self.sum_p2[i] += p * p;
        }
        self.payment += day.payment;
        self.discomfort += day.discomfort;
        self.surplus += day.surplus;
        self.surplus2 += day.surplus * day.surplus;
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        for i in 0..self.sum_p.len() {
            self.sum_p[i] += o.sum_p[i];
            self.sum_p2[i] += o.sum_p2[i];
        }
        self.payment += o.payment;
        self.discomfort += o.discomfort;
        self.surplus += o.surplus;
        self.surplus2 += o.surplus2;
    }
}

const MC_BLOCK: u64 = 1024;

fn standard_error(sum: f64, sum2: f64, count: u64) -> f64 {
    if count < 2 {
        return f64::INFINITY;
    }
    let n = count as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

/// Runs `replications` independent days for one consumer.
///
/// Replicates are processed in fixed blocks whose partial sums are combined
/// in block order, so the summary is bitwise reproducible regardless of
/// thread scheduling.
pub fn monte_carlo(
    params: &ConsumerParams,
    policy: Policy,
    pi: &PriceVector,
    weather: &[f64],
    seed: SimSeed,
    replications: u64,
) -> Result<MonteCarloSummary> {
    check_inputs(params, pi, weather)?;
    if replications == 0 {
        return Err(Error::invalid("replications", "must be positive"));
    }
    let n = params.horizon();
    let blocks = replications.div_ceil(MC_BLOCK);
    let partials: Vec<Result<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(n);
            let end = ((b + 1) * MC_BLOCK).min(replications);
            for r in b * MC_BLOCK..end {
                let s = seed.replicate(seed.replicate.wrapping_add(r));
                let day = match policy {
                    Policy::Optimal => simulate_day(params, pi, weather, s)?,
                    Policy::Thermostat { tolerance } => {
                        baseline_thermostat(params, tolerance, pi, weather, s)?
                    }
                };
                m.add(&day);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::new(n);
    for p in partials {
        total.merge(&p?);
    }
    let count = total.count as f64;
    Ok(MonteCarloSummary {
        replications: total.count,
        mean_consumption: DVector::from_iterator(n, total.sum_p.iter().map(|s| s / count)),
        se_consumption: DVector::from_iterator(
            n,
            (0..n).map(|i| standard_error(total.sum_p[i], total.sum_p2[i], total.count)),
        ),
        mean_payment: total.payment / count,
        mean_discomfort: total.discomfort / count,
        mean_surplus: total.surplus / count,
        se_surplus: standard_error(total.surplus, total.surplus2, total.count),
    })
}
