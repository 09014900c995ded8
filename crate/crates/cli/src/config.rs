//! Experiment configuration (TOML). Unknown keys are rejected.
//!
//! ```toml
//! seed = 42
//!
//! [population]
//! count = 50
//! alpha = 0.5
//! beta = { min = 0.08, max = 0.12 }
//!
//! [cost]
//! file = "prices.csv"
//! unit = "usd_per_mwh"
//!
//! [renewable]
//! capacity = [0.5, 1.0, 100.0]
//! ```

use std::path::{Path, PathBuf};

use dahp_core::{BatteryGroup, BatteryParams, ConsumerParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Unit, HOURS};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required here or on the command line.
    pub seed: Option<u64>,
    /// Relative to the config file; `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Adds wall-clock time to the manifest, which then differs between runs.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub population: PopulationSpec,
    #[serde(default)]
    pub weather: WeatherSource,
    #[serde(default)]
    pub cost: CostSource,
    #[serde(default)]
    pub pareto: ParetoSpec,
    #[serde(default)]
    pub benchmarks: BenchmarkSpec,
    #[serde(default)]
    pub renewable: RenewableSpec,
    #[serde(default)]
    pub storage: StorageSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
}

/// A fixed value or a uniform draw per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamDist {
    Fixed(f64),
    Uniform(UniformRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub min: f64,
    pub max: f64,
}

impl ParamDist {
    fn check(&self, name: &str) -> CliResult<()> {
        let ok = match *self {
            ParamDist::Fixed(v) => v.is_finite(),
            ParamDist::Uniform(UniformRange { min, max }) => min.is_finite() && max.is_finite() && min <= max,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::config(format!("population.{name}: invalid value or range")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ParamDist::Fixed(v) => v,
            ParamDist::Uniform(UniformRange { min, max }) if min == max => min,
            ParamDist::Uniform(UniformRange { min, max }) => rng.random_range(min..max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    /// Number of generated consumers; not allowed together with `consumers`.
    pub count: Option<usize>,
    #[serde(default = "defaults::alpha")]
    pub alpha: ParamDist,
    #[serde(default = "defaults::beta")]
    pub beta: ParamDist,
    #[serde(default = "defaults::mu")]
    pub mu: ParamDist,
    /// Desired indoor temperature, °C, the same in every hour.
    #[serde(default = "defaults::setpoint")]
    pub setpoint: ParamDist,
    #[serde(default = "defaults::noise")]
    pub process_noise_var: ParamDist,
    #[serde(default = "defaults::noise")]
    pub obs_noise_var: ParamDist,
    /// Explicit consumers, used instead of generated ones.
    #[serde(default)]
    pub consumers: Vec<ConsumerParams>,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            count: None,
            alpha: defaults::alpha(),
            beta: defaults::beta(),
            mu: defaults::mu(),
            setpoint: defaults::setpoint(),
            process_noise_var: defaults::noise(),
            obs_noise_var: defaults::noise(),
            consumers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherSource {
    /// Hourly outdoor temperature in °C; synthetic when absent.
    pub file: Option<PathBuf>,
    /// Number of synthetic days.
    pub days: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSource {
    /// Hourly day-ahead wholesale prices; synthetic when absent.
    pub file: Option<PathBuf>,
    /// Unit of `file`; defaults to $/MWh.
    pub unit: Option<Unit>,
    /// Number of synthetic days.
    pub days: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoSpec {
    /// Explicit ascending weights in [0, 1].
    pub eta: Option<Vec<f64>>,
    /// Evenly spaced weights on [0, 1]; default 101.
    pub eta_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    /// Sweep points per benchmark tariff.
    #[serde(default = "defaults::sweep_points")]
    pub points: usize,
    /// Weight points for the optimal-price trace.
    #[serde(default = "defaults::eta_points")]
    pub eta_points: usize,
    /// Flat price range in $/kWh.
    pub cp_range: Option<[f64; 2]>,
    /// Off-peak price range in $/kWh.
    pub tou_range: Option<[f64; 2]>,
    /// Markup range; must contain 1.
    pub pmp_range: Option<[f64; 2]>,
    #[serde(default = "defaults::tou_ratio")]
    pub tou_ratio: f64,
    /// Peak window `[start, end)` in 0-based clock hours.
    #[serde(default = "defaults::tou_peak")]
    pub tou_peak: [usize; 2],
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            points: defaults::sweep_points(),
            eta_points: defaults::eta_points(),
            cp_range: None,
            tou_range: None,
            pmp_range: None,
            tou_ratio: defaults::tou_ratio(),
            tou_peak: defaults::tou_peak(),
        }
    }
}

/// One value for every hour or 24 hourly values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HourlyValue {
    Scalar(f64),
    Hourly(Vec<f64>),
}

impl HourlyValue {
    pub fn expand(&self, name: &str) -> CliResult<Vec<f64>> {
        match self {
            HourlyValue::Scalar(v) => Ok(vec![*v; HOURS]),
            HourlyValue::Hourly(v) if v.len() == HOURS => Ok(v.clone()),
            HourlyValue::Hourly(v) => Err(CliError::config(format!(
                "{name}: expected {HOURS} hourly values, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableSpec {
    #[serde(default = "defaults::renewable_eta")]
    pub eta: Vec<f64>,
    /// Capacity grid `K` in kWh per hour, or multiples of mean hourly demand
    /// at the storage-free optimal price when `relative_capacity` is set.
    #[serde(default = "defaults::capacity")]
    pub capacity: Vec<f64>,
    #[serde(default = "defaults::yes")]
    pub relative_capacity: bool,
    /// Renewable marginal cost in $/kWh.
    #[serde(default = "defaults::zero_hourly")]
    pub marginal_cost: HourlyValue,
}

impl Default for RenewableSpec {
    fn default() -> Self {
        Self {
            eta: defaults::renewable_eta(),
            capacity: defaults::capacity(),
            relative_capacity: true,
            marginal_cost: defaults::zero_hourly(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub count: u32,
    pub capacity: f64,
    #[serde(default)]
    pub initial: f64,
    #[serde(default = "defaults::one")]
    pub storage_eff: f64,
    #[serde(default = "defaults::one")]
    pub charge_eff: f64,
    #[serde(default = "defaults::one")]
    pub discharge_eff: f64,
    pub charge_limit: f64,
    pub discharge_limit: f64,
}

impl BatterySpec {
    pub fn group(&self) -> BatteryGroup {
        BatteryGroup {
            params: BatteryParams {
                capacity: self.capacity,
                initial: self.initial,
                storage_eff: self.storage_eff,
                charge_eff: self.charge_eff,
                discharge_eff: self.discharge_eff,
                charge_limit: self.charge_limit,
                discharge_limit: self.discharge_limit,
            },
            count: self.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSpec {
    #[serde(default = "defaults::storage_eta")]
    pub eta: Vec<f64>,
    /// Battery groups; when absent a quarter of consumers own a 13.5 kWh
    /// battery. An empty list means no batteries.
    pub batteries: Option<Vec<BatterySpec>>,
    #[serde(default = "defaults::max_evals")]
    pub max_evals: usize,
    /// Initial and final search steps relative to the mean seed price.
    #[serde(default = "defaults::step_rel")]
    pub step_rel: f64,
    #[serde(default = "defaults::step_min_rel")]
    pub step_min_rel: f64,
}

impl Default for StorageSpec {
    fn default() -> Self {
        Self {
            eta: defaults::storage_eta(),
            batteries: None,
            max_evals: defaults::max_evals(),
            step_rel: defaults::step_rel(),
            step_min_rel: defaults::step_min_rel(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatedPrice {
    /// `π = λ̄`, the welfare-maximizing price.
    #[default]
    Wholesale,
    /// Optimal price for `simulate.eta`.
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default = "defaults::sim_days")]
    pub days: u64,
    #[serde(default)]
    pub price: SimulatedPrice,
    #[serde(default = "defaults::one")]
    pub eta: f64,
    /// Thermostat baselines, °C; an empty list skips the baseline file.
    #[serde(default = "defaults::tolerances")]
    pub tolerances: Vec<f64>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            days: defaults::sim_days(),
            price: SimulatedPrice::Wholesale,
            eta: 1.0,
            tolerances: defaults::tolerances(),
        }
    }
}

mod defaults {
    use super::{HourlyValue, ParamDist};

    pub fn alpha() -> ParamDist {
        ParamDist::Fixed(0.5)
    }
    pub fn beta() -> ParamDist {
        ParamDist::Fixed(0.1)
    }
    pub fn mu() -> ParamDist {
        ParamDist::Fixed(0.5)
    }
    pub fn setpoint() -> ParamDist {
        ParamDist::Fixed(18.0)
    }
    pub fn noise() -> ParamDist {
        ParamDist::Fixed(0.1)
    }
    pub fn sweep_points() -> usize {
        200
    }
    pub fn eta_points() -> usize {
        101
    }
    pub fn tou_ratio() -> f64 {
        1.2
    }
    pub fn tou_peak() -> [usize; 2] {
        [9, 17]
    }
    pub fn renewable_eta() -> Vec<f64> {
        vec![0.0, 0.25, 0.5, 0.75, 1.0]
    }
    pub fn capacity() -> Vec<f64> {
        vec![0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0]
    }
    pub fn yes() -> bool {
        true
    }
    pub fn zero_hourly() -> HourlyValue {
        HourlyValue::Scalar(0.0)
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn storage_eta() -> Vec<f64> {
        vec![0.0, 0.5, 1.0]
    }
    pub fn max_evals() -> usize {
        20_000
    }
    pub fn step_rel() -> f64 {
        0.05
    }
    pub fn step_min_rel() -> f64 {
        1e-6
    }
    pub fn sim_days() -> u64 {
        30
    }
    pub fn tolerances() -> Vec<f64> {
        vec![0.0, 2.0]
    }
}

const DEFAULT_POPULATION: usize = 50;

fn check_weights(name: &str, eta: &[f64]) -> CliResult<()> {
    if eta.is_empty() {
        return Err(CliError::config(format!("{name}: grid must be non-empty")));
    }
    if eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(CliError::config(format!("{name}: weights must lie in [0, 1]")));
    }
    if eta.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config(format!("{name}: weights must be strictly ascending")));
    }
    Ok(())
}

fn check_range(name: &str, r: Option<[f64; 2]>) -> CliResult<()> {
    match r {
        Some([lo, hi]) if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
            Err(CliError::config(format!("{name}: need finite lo < hi")))
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::config("seed missing: set `seed` in the config or pass --seed"))
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> CliResult<()> {
        self.seed()?;
        let pop = &self.population;
        if !pop.consumers.is_empty() && pop.count.is_some() {
            return Err(CliError::config("population: give either `count` or `consumers`, not both"));
        }
        if pop.count == Some(0) {
            return Err(CliError::config("population.count must be positive"));
        }
        for (name, d) in [
            ("alpha", pop.alpha),
            ("beta", pop.beta),
            ("mu", pop.mu),
            ("setpoint", pop.setpoint),
            ("process_noise_var", pop.process_noise_var),
            ("obs_noise_var", pop.obs_noise_var),
        ] {
            d.check(name)?;
        }
        for (name, days, file) in [
            ("weather", self.weather.days, self.weather.file.is_some()),
            ("cost", self.cost.days, self.cost.file.is_some()),
        ] {
            if file && days.is_some() {
                return Err(CliError::config(format!("{name}: `days` applies to synthetic data only")));
            }
            if days == Some(0) {
                return Err(CliError::config(format!("{name}.days must be positive")));
            }
        }
        if self.cost.unit == Some(Unit::Celsius) {
            return Err(CliError::config("cost.unit must be usd_per_mwh or usd_per_kwh"));
        }
        if self.pareto.eta.is_some() && self.pareto.eta_points.is_some() {
            return Err(CliError::config("pareto: give either `eta` or `eta_points`, not both"));
        }
        check_weights("pareto.eta", &self.pareto_grid())?;
        let b = &self.benchmarks;
        if b.points < 2 || b.eta_points < 2 {
            return Err(CliError::config("benchmarks: need at least 2 points per trace"));
        }
        check_range("benchmarks.cp_range", b.cp_range)?;
        check_range("benchmarks.tou_range", b.tou_range)?;
        check_range("benchmarks.pmp_range", b.pmp_range)?;
        if let Some([lo, hi]) = b.pmp_range {
            if !(lo <= 1.0 && 1.0 <= hi) {
                return Err(CliError::config("benchmarks.pmp_range must contain 1"));
            }
        }
        if !(b.tou_ratio.is_finite() && b.tou_ratio > 0.0) {
            return Err(CliError::config("benchmarks.tou_ratio must be positive"));
        }
        if !(b.tou_peak[0] < b.tou_peak[1] && b.tou_peak[1] <= HOURS) {
            return Err(CliError::config("benchmarks.tou_peak must satisfy start < end <= 24"));
        }
        let r = &self.renewable;
        check_weights("renewable.eta", &r.eta)?;
        if r.capacity.is_empty() || r.capacity.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(CliError::config("renewable.capacity: need a non-empty list of values >= 0"));
        }
        r.marginal_cost.expand("renewable.marginal_cost")?;
        let s = &self.storage;
        check_weights("storage.eta", &s.eta)?;
        if s.max_evals == 0 || !(s.step_rel > s.step_min_rel && s.step_min_rel > 0.0) {
            return Err(CliError::config("storage: need max_evals > 0 and step_rel > step_min_rel > 0"));
        }
        for b in s.batteries.iter().flatten() {
            b.group().params.validate().map_err(|e| CliError::config(format!("storage.batteries: {e}")))?;
        }
        let sim = &self.simulate;
        if sim.days == 0 {
            return Err(CliError::config("simulate.days must be positive"));
        }
        if !(0.0..=1.0).contains(&sim.eta) {
            return Err(CliError::config("simulate.eta must lie in [0, 1]"));
        }
        if sim.tolerances.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::config("simulate.tolerances must be >= 0"));
        }
        Ok(())
    }

    pub fn pareto_grid(&self) -> Vec<f64> {
        match (&self.pareto.eta, self.pareto.eta_points) {
            (Some(eta), _) => eta.clone(),
            (None, Some(n)) => dahp_core::pricing::eta_grid(n),
            (None, None) => dahp_core::pricing::default_eta_grid(),
        }
    }

    /// Explicit consumers, or `count` consumers drawn from the parameter
    /// distributions with a seeded stream.
    pub fn consumers(&self, seed: u64) -> CliResult<Vec<ConsumerParams>> {
        let pop = &self.population;
        let people = if pop.consumers.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            (0..pop.count.unwrap_or(DEFAULT_POPULATION))
                .map(|_| {
                    let alpha = pop.alpha.sample(&mut rng);
                    let beta = pop.beta.sample(&mut rng);
                    let mu = pop.mu.sample(&mut rng);
                    let setpoint = pop.setpoint.sample(&mut rng);
                    ConsumerParams {
                        alpha,
                        beta,
                        mu,
                        desired_temp: vec![setpoint; HOURS],
                        process_noise_var: pop.process_noise_var.sample(&mut rng),
                        obs_noise_var: pop.obs_noise_var.sample(&mut rng),
                    }
                })
                .collect()
        } else {
            pop.consumers.clone()
        };
        for (j, c) in people.iter().enumerate() {
            if c.horizon() != HOURS {
                return Err(CliError::config(format!(
                    "population: consumer {j} has {} setpoints, expected {HOURS}",
                    c.horizon()
                )));
            }
            c.validate().map_err(|e| CliError::config(format!("population: consumer {j}: {e}")))?;
        }
        Ok(people)
    }

    /// Configured battery groups, or the default of one 13.5 kWh battery
    /// per four consumers.
    pub fn battery_groups(&self, consumers: usize) -> Vec<BatteryGroup> {
        match &self.storage.batteries {
            Some(list) => list.iter().map(BatterySpec::group).collect(),
            None => vec![BatteryGroup {
                params: BatteryParams {
                    capacity: 13.5,
                    initial: 0.0,
                    storage_eff: 1.0,
                    charge_eff: 0.95,
                    discharge_eff: 0.95,
                    charge_limit: 5.0,
                    discharge_limit: 5.0,
                },
                count: consumers.div_ceil(4) as u32,
            }],
        }
    }

    /// Resolves a path written in the config relative to the config file.
    pub fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}
