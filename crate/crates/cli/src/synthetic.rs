//! Synthetic weather and wholesale-price days.
//!
//! Day 0 of each generator is the exact reference profile; later days add a
//! seeded day-level shift and small hourly jitter.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{HourlySeries, Unit, HOURS};

const TROUGH_HOUR: f64 = 5.0;
const PEAK_HOUR: f64 = 15.0;
const TROUGH_TEMP: f64 = 22.0;
const PEAK_TEMP: f64 = 35.0;

/// Outdoor temperature in °C at clock hour `h`: a cosine rise from the 05:00
/// trough to the 15:00 peak and a slower cosine fall back to the trough.
pub fn reference_temperature(h: usize) -> f64 {
    let h = h as f64;
    let rise = PEAK_HOUR - TROUGH_HOUR;
    let fall = 24.0 - rise;
    let phase = if (TROUGH_HOUR..PEAK_HOUR).contains(&h) {
        std::f64::consts::PI * (1.0 + (h - TROUGH_HOUR) / rise)
    } else {
        let since_peak = (h - PEAK_HOUR).rem_euclid(24.0);
        std::f64::consts::PI * since_peak / fall
    };
    let swing = PEAK_TEMP - TROUGH_TEMP;
    TROUGH_TEMP + swing * (1.0 + phase.cos()) / 2.0
}

/// Wholesale price in $/MWh at clock hour `h`: a base level with a morning
/// and a larger evening peak.
pub fn reference_price_mwh(h: usize) -> f64 {
    let h = h as f64;
    30.0 + 25.0 * (-((h - 8.0) / 2.5).powi(2)).exp() + 40.0 * (-((h - 18.0) / 3.0).powi(2)).exp()
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 7, 1).expect("valid date")
}

fn generate(days: usize, seed: u64, stream: u64, unit: Unit, day: impl Fn(&mut ChaCha8Rng, usize) -> Vec<f64>) -> Vec<HourlySeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..days)
        .map(|d| HourlySeries {
            date: start_date() + Days::new(d as u64),
            values: day(&mut rng, d),
            unit,
        })
        .collect()
}

pub fn weather_days(days: usize, seed: u64) -> Vec<HourlySeries> {
    generate(days, seed, 11, Unit::Celsius, |rng, d| {
        let shift = if d == 0 { 0.0 } else { rng.random_range(-1.5..1.5) };
        (0..HOURS)
            .map(|h| {
                let jitter = if d == 0 { 0.0 } else { rng.random_range(-0.3..0.3) };
                reference_temperature(h) + shift + jitter
            })
            .collect()
    })
}

/// Prices in $/kWh.
pub fn price_days(days: usize, seed: u64) -> Vec<HourlySeries> {
    generate(days, seed, 12, Unit::UsdPerKwh, |rng, d| {
        let scale = if d == 0 { 1.0 } else { rng.random_range(0.9..1.1) };
        (0..HOURS)
            .map(|h| {
                let jitter = if d == 0 { 1.0 } else { rng.random_range(0.97..1.03) };
                reference_price_mwh(h) * scale * jitter * 1e-3
            })
            .collect()
    })
}
