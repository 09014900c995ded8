//! Affine demand models for thermostatically controlled loads.
//!
//! A consumer's indoor temperature follows
//! `x_i = x_{i-1} + α (a_i − x_{i-1}) − β p_i + w_i` and is observed with
//! additive Gaussian noise. Under the optimal price-aware controller the
//! expected consumption is `−G π + b̄`, with `G` tridiagonal and fixed by
//! `(α, β, μ)` alone. Aggregating consumers sums every term.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::optim::SpdFactorization;
use crate::{PriceVector, HORIZON};

/// HVAC and comfort parameters of one consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerParams {
    /// Insulation factor per hour, strictly inside (0, 1).
    pub alpha: f64,
    /// HVAC efficiency in °C per kWh; positive for cooling, negative for heating.
    pub beta: f64,
    /// Discomfort weight in $ per °C².
    pub mu: f64,
    /// Hourly setpoints in °C.
    pub desired_temp: Vec<f64>,
    /// Variance of the process noise `w_i` (°C²).
    pub process_noise_var: f64,
    /// Variance of the measurement noise `v_i` (°C²).
    pub obs_noise_var: f64,
}

impl ConsumerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(Error::invalid(
                "beta",
                format!("must be finite and non-zero, got {}", self.beta),
            ));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be positive, got {}", self.mu)));
        }
        for (name, v) in [
            ("process_noise_var", self.process_noise_var),
            ("obs_noise_var", self.obs_noise_var),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        let n = self.desired_temp.len();
        if n == 0 || n > HORIZON {
            return Err(Error::invalid(
                "desired_temp",
                format!("horizon must be 1..={HORIZON}, got {n}"),
            ));
        }
        if self.desired_temp.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("desired_temp", "entries must be finite"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.desired_temp.len()
    }

    /// `1 / (2 μ β²)`, the common scale of every entry of `G`.
    pub fn gain_scale(&self) -> f64 {
        1.0 / (2.0 * self.mu * self.beta * self.beta)
    }

    /// Indoor temperature the optimal controller aims for in hour `i` (0-based):
    /// `(π_i − (1−α) π_{i+1}) / (2μβ) + t_i`, with the price past the horizon zero.
    pub fn target_temperature(&self, pi: &PriceVector, i: usize) -> f64 {
        let offset = pi[i] - (1.0 - self.alpha) * pi.get_or_zero(i + 1);
        offset / (2.0 * self.mu * self.beta) + self.desired_temp[i]
    }

    /// Indoor temperature at the start of the day.
    pub fn initial_temp(&self) -> f64 {
        self.desired_temp[0]
    }
}

/// Anything exposing an affine mean-demand map `−G π + b̄` and a surplus constant.
pub trait AffineResponse {
    fn gain(&self) -> &DMatrix<f64>;
    fn intercept_mean(&self) -> &DVector<f64>;
    fn cs_constant(&self) -> f64;

    fn horizon(&self) -> usize {
        self.intercept_mean().len()
    }
}

/// Demand model of a single consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerDemandModel {
    pub gain: DMatrix<f64>,
    pub intercept_mean: DVector<f64>,
    pub intercept_cov: DMatrix<f64>,
    pub cs_constant: f64,
}

impl AffineResponse for ConsumerDemandModel {
    fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    fn intercept_mean(&self) -> &DVector<f64> {
        &self.intercept_mean
    }

    fn cs_constant(&self) -> f64 {
        self.cs_constant
    }
}

/// Price-sensitivity matrix of one consumer.
pub fn consumer_gain(params: &ConsumerParams) -> DMatrix<f64> {
    let n = params.horizon();
    let s = params.gain_scale();
    let keep = 1.0 - params.alpha;
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            if i == 0 {
                s
            } else {
                s * (1.0 + keep * keep)
            }
        } else if i.abs_diff(k) == 1 {
            -s * keep
        } else {
            0.0
        }
    })
}

/// Second-order statistics of the closed loop under the optimal controller.
///
/// Every error term is a linear combination of the independent draws
/// `v_0, w_1, v_1, …, w_N, v_N`, so coefficients are carried explicitly and
/// variances follow exactly (no steady-state or whiteness assumption).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ClosedLoopNoise {
    /// Variance of `x_i − x*_i` for hours 1..=N.
    pub state_dev_var: Vec<f64>,
    /// Covariance of the random part of hourly consumption.
    pub consumption_cov: DMatrix<f64>,
}

/// Kalman gains `K_1..K_N` for the indoor-temperature filter started at
/// `x̂_0 = y_0` with variance `σ_v²`.
pub(crate) fn kalman_gains(params: &ConsumerParams) -> Vec<f64> {
    let keep = 1.0 - params.alpha;
    let mut post = params.obs_noise_var;
    (0..params.horizon())
        .map(|_| {
            let prior = keep * keep * post + params.process_noise_var;
            let denom = prior + params.obs_noise_var;
            let gain = if denom > 0.0 { prior / denom } else { 1.0 };
            post = (1.0 - gain) * prior;
            gain
        })
        .collect()
}

pub(crate) fn closed_loop_noise(params: &ConsumerParams) -> ClosedLoopNoise {
    let n = params.horizon();
    let keep = 1.0 - params.alpha;
    let sources = 2 * n + 1;
    let mut source_var = vec![params.process_noise_var; sources];
    source_var[0] = params.obs_noise_var;
    for i in 1..=n {
        source_var[2 * i] = params.obs_noise_var;
    }
    let variance = |c: &[f64]| c.iter().zip(&source_var).map(|(a, v)| a * a * v).sum::<f64>();

    let gains = kalman_gains(params);
    // Estimation error e = x − x̂ and estimate offset u = x̂ − x*.
    let mut e = vec![0.0; sources];
    let mut u = vec![0.0; sources];
    e[0] = -1.0;
    u[0] = 1.0;
    let mut offsets = Vec::with_capacity(n);
    let mut state_dev_var = Vec::with_capacity(n);
    for (i, &k) in gains.iter().enumerate() {
        offsets.push(u.clone());
        let mut delta: Vec<f64> = e.iter().map(|c| keep * c).collect();
        delta[2 * i + 1] += 1.0;
        state_dev_var.push(variance(&delta));
        let mut innovation = delta.clone();
        innovation[2 * i + 2] += 1.0;
        u = innovation.iter().map(|c| k * c).collect();
        e = delta.iter().zip(&u).map(|(d, c)| d - c).collect();
    }

    let scale = keep / params.beta;
    let consumption_cov = DMatrix::from_fn(n, n, |i, k| {
        let s: f64 = offsets[i]
            .iter()
            .zip(&offsets[k])
            .zip(&source_var)
            .map(|((a, b), v)| a * b * v)
            .sum();
        scale * scale * s
    });
    ClosedLoopNoise {
        state_dev_var,
        consumption_cov,
    }
}

/// Builds the demand model of one consumer facing `weather_forecast` (°C).
///
/// The intercept is the policy's expected consumption at zero price, with the
/// forecast standing in for the outdoor-temperature estimate and the day
/// starting at the first setpoint. `cs_constant` is `−μ Σ Var(x_i)`, the only
/// part of expected surplus not explained by the price.
pub fn build_consumer_model(
    params: &ConsumerParams,
    weather_forecast: &[f64],
) -> Result<ConsumerDemandModel> {
    params.validate()?;
    let n = params.horizon();
    check_dim(n, weather_forecast.len())?;
    if weather_forecast.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("weather_forecast", "entries must be finite"));
    }
    let alpha = params.alpha;
    let t = &params.desired_temp;
    let intercept_mean = DVector::from_fn(n, |i, _| {
        let previous = if i == 0 { params.initial_temp() } else { t[i - 1] };
        ((1.0 - alpha) * previous + alpha * weather_forecast[i] - t[i]) / params.beta
    });
    let noise = closed_loop_noise(params);
    let cs_constant = -params.mu * noise.state_dev_var.iter().sum::<f64>();
    Ok(ConsumerDemandModel {
        gain: consumer_gain(params),
        intercept_mean,
        intercept_cov: noise.consumption_cov,
        cs_constant,
    })
}

/// Aggregate demand model `d(π) = −G π + b` with its Cholesky factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDemandModel {
    gain: DMatrix<f64>,
    intercept_mean: DVector<f64>,
    intercept_cov: DMatrix<f64>,
    cs_constant: f64,
    factor: SpdFactorization,
}

impl AffineDemandModel {
    /// Fails if `gain` is not square, mis-sized, or not positive definite.
    pub fn new(
        gain: DMatrix<f64>,
        intercept_mean: DVector<f64>,
        intercept_cov: DMatrix<f64>,
        cs_constant: f64,
    ) -> Result<Self> {
        let n = intercept_mean.len();
        check_dim(n, gain.nrows())?;
        check_dim(n, gain.ncols())?;
        check_dim(n, intercept_cov.nrows())?;
        check_dim(n, intercept_cov.ncols())?;
        let factor = SpdFactorization::new(&gain)?;
        Ok(Self {
            gain,
            intercept_mean,
            intercept_cov,
            cs_constant,
            factor,
        })
    }

    /// Noise-free model with the given gain and intercept.
    pub fn deterministic(gain: DMatrix<f64>, intercept_mean: DVector<f64>) -> Result<Self> {
        let n = intercept_mean.len();
        Self::new(gain, intercept_mean, DMatrix::zeros(n, n), 0.0)
    }

    pub fn from_consumers(params: &[ConsumerParams], weather_forecast: &[f64]) -> Result<Self> {
        let models = params
            .iter()
            .map(|p| build_consumer_model(p, weather_forecast))
            .collect::<Result<Vec<_>>>()?;
        aggregate(&models)
    }

    pub fn intercept_cov(&self) -> &DMatrix<f64> {
        &self.intercept_cov
    }

    pub fn factor(&self) -> &SpdFactorization {
        &self.factor
    }

    /// `G⁻¹ rhs` via the cached factorization.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.factor.solve(rhs)
    }

    /// Price at which expected demand vanishes, `G⁻¹ b̄`.
    pub fn zero_demand_price(&self) -> DVector<f64> {
        self.factor
            .solve(&self.intercept_mean)
            .expect("factor and intercept share a dimension")
    }

    pub fn mean_demand(&self, pi: &PriceVector) -> Result<MeanDemand> {
        check_dim(self.horizon(), pi.len())?;
        let values = &self.intercept_mean - &self.gain * pi.as_vector();
        let has_negative = values.iter().any(|&d| d < 0.0);
        Ok(MeanDemand {
            values,
            has_negative,
        })
    }
}

impl AffineResponse for AffineDemandModel {
    fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    fn intercept_mean(&self) -> &DVector<f64> {
        &self.intercept_mean
    }

    fn cs_constant(&self) -> f64 {
        self.cs_constant
    }
}

/// Expected hourly demand in kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDemand {
    pub values: DVector<f64>,
    /// Set when any hour has negative expected demand; the affine model
    /// ignores the positivity constraint on consumption.
    pub has_negative: bool,
}

/// Sums consumer models, treating consumers as independent.
pub fn aggregate(models: &[ConsumerDemandModel]) -> Result<AffineDemandModel> {
    let first = models.first().ok_or(Error::EmptyPopulation)?;
    let n = first.intercept_mean.len();
    let mut gain = DMatrix::zeros(n, n);
    let mut intercept_mean = DVector::zeros(n);
    let mut intercept_cov = DMatrix::zeros(n, n);
    let mut cs_constant = 0.0;
    for m in models {
        check_dim(n, m.intercept_mean.len())?;
        check_dim(n, m.gain.nrows())?;
        check_dim(n, m.intercept_cov.nrows())?;
        gain += &m.gain;
        intercept_mean += &m.intercept_mean;
        intercept_cov += &m.intercept_cov;
        cs_constant += m.cs_constant;
    }
    AffineDemandModel::new(gain, intercept_mean, intercept_cov, cs_constant)
}
