//! Shared fixtures for the benchmarks.

use dahp_core::pricing::WholesaleCost;
use dahp_core::{AffineDemandModel, ConsumerParams};

/// Outdoor temperature of a hot day, 22 °C to 35 °C.
pub fn hot_day() -> Vec<f64> {
    (0..24)
        .map(|h| 28.5 - 6.5 * ((h as f64 - 3.0) / 24.0 * std::f64::consts::TAU).cos())
        .collect()
}

/// Two-peak wholesale cost in $/kWh.
pub fn two_peak_cost() -> WholesaleCost {
    let mean = (0..24)
        .map(|h| {
            let h = h as f64;
            0.03 + 0.025 * (-((h - 8.0) / 2.5).powi(2)).exp() + 0.04 * (-((h - 18.0) / 3.0).powi(2)).exp()
        })
        .collect();
    WholesaleCost::new(mean).expect("valid cost")
}

/// `count` consumers with parameters spread deterministically.
pub fn population(count: usize) -> Vec<ConsumerParams> {
    (0..count)
        .map(|j| {
            let t = j as f64 / count.max(1) as f64;
            ConsumerParams {
                alpha: 0.4 + 0.2 * t,
                beta: 0.08 + 0.04 * t,
                mu: 0.3 + 0.4 * (1.0 - t),
                desired_temp: vec![17.0 + 3.0 * t; 24],
                process_noise_var: 0.1,
                obs_noise_var: 0.1,
            }
        })
        .collect()
}

pub fn model(count: usize) -> AffineDemandModel {
    AffineDemandModel::from_consumers(&population(count), &hot_day()).expect("valid model")
}
