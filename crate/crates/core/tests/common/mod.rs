#![allow(dead_code)]

use dahp_core::{
    build_consumer_model, storage::BatteryParams, AffineDemandModel, ConsumerParams, DMatrix,
    DVector, PriceVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Daily outdoor temperature between 22 °C and 35 °C.
pub fn hot_day(hours: usize) -> Vec<f64> {
    (0..hours)
        .map(|h| 28.5 - 6.5 * ((h as f64 - 3.0) / 24.0 * std::f64::consts::TAU).cos())
        .collect()
}

/// Wholesale cost in $/kWh with a morning and an evening peak.
pub fn two_peak_cost(hours: usize) -> Vec<f64> {
    (0..hours)
        .map(|h| {
            let h = h as f64;
            0.03 + 0.025 * (-((h - 8.0) / 2.5).powi(2)).exp()
                + 0.04 * (-((h - 18.0) / 3.0).powi(2)).exp()
        })
        .collect()
}

pub fn random_consumer(rng: &mut impl Rng, hours: usize, noisy: bool) -> ConsumerParams {
    let setpoint = rng.random_range(17.0..21.0);
    ConsumerParams {
        alpha: rng.random_range(0.3..0.7),
        beta: rng.random_range(0.07..0.13),
        mu: rng.random_range(0.3..0.7),
        desired_temp: (0..hours).map(|_| setpoint + rng.random_range(-1.0..1.0)).collect(),
        process_noise_var: if noisy { rng.random_range(0.05..0.5) } else { 0.0 },
        obs_noise_var: if noisy { rng.random_range(0.05..0.5) } else { 0.0 },
    }
}

pub fn random_population(rng: &mut impl Rng, count: usize, hours: usize) -> (Vec<ConsumerParams>, Vec<f64>) {
    let weather = hot_day(hours);
    let people = (0..count).map(|_| random_consumer(rng, hours, true)).collect();
    (people, weather)
}

pub fn random_model(rng: &mut impl Rng, count: usize, hours: usize) -> AffineDemandModel {
    let (people, weather) = random_population(rng, count, hours);
    AffineDemandModel::from_consumers(&people, &weather).unwrap()
}

pub fn random_prices(rng: &mut impl Rng, hours: usize, lo: f64, hi: f64) -> PriceVector {
    PriceVector::with_horizon((0..hours).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn random_cost(rng: &mut impl Rng, hours: usize) -> Vec<f64> {
    (0..hours).map(|_| rng.random_range(0.02..0.09)).collect()
}

/// Indoor temperatures from the noise-free dynamics under consumption `p`.
pub fn noiseless_trajectory(params: &ConsumerParams, weather: &[f64], p: &DVector<f64>) -> Vec<f64> {
    let mut x = params.desired_temp[0];
    p.iter()
        .zip(weather)
        .map(|(p, a)| {
            x = x + params.alpha * (a - x) - params.beta * p;
            x
        })
        .collect()
}

/// Bill plus discomfort of a noise-free day.
pub fn noiseless_cost(params: &ConsumerParams, weather: &[f64], pi: &PriceVector, p: &DVector<f64>) -> f64 {
    let x = noiseless_trajectory(params, weather, p);
    let discomfort: f64 = x
        .iter()
        .zip(&params.desired_temp)
        .map(|(x, t)| (x - t) * (x - t))
        .sum();
    pi.as_vector().dot(p) + params.mu * discomfort
}

/// Minimizes a smooth function by Newton steps on central-difference
/// derivatives, solved with an LU factorization.
pub fn fd_newton_min<F: Fn(&DVector<f64>) -> f64>(f: F, x0: DVector<f64>, h: f64, iters: usize) -> DVector<f64> {
    let n = x0.len();
    let mut x = x0;
    let e = |k: usize| {
        let mut v = DVector::zeros(n);
        v[k] = h;
        v
    };
    for _ in 0..iters {
        let f0 = f(&x);
        let grad = DVector::from_fn(n, |k, _| (f(&(&x + e(k))) - f(&(&x - e(k)))) / (2.0 * h));
        let hess = DMatrix::from_fn(n, n, |i, k| {
            if i == k {
                (f(&(&x + e(i))) - 2.0 * f0 + f(&(&x - e(i)))) / (h * h)
            } else {
                (f(&(&x + e(i) + e(k))) - f(&(&x + e(i) - e(k))) - f(&(&x - e(i) + e(k)))
                    + f(&(&x - e(i) - e(k))))
                    / (4.0 * h * h)
            }
        });
        let step = hess.lu().solve(&grad).expect("singular finite-difference Hessian");
        x -= step;
    }
    x
}

/// Consumption minimizing the noise-free bill plus discomfort.
pub fn oracle_demand(params: &ConsumerParams, weather: &[f64], pi: &PriceVector) -> DVector<f64> {
    let n = params.horizon();
    fd_newton_min(|p| noiseless_cost(params, weather, pi, p), DVector::zeros(n), 1e-2, 3)
}

/// Optimal surplus of a noise-free consumer.
pub fn oracle_surplus(params: &ConsumerParams, weather: &[f64], pi: &PriceVector) -> f64 {
    -noiseless_cost(params, weather, pi, &oracle_demand(params, weather, pi))
}

/// Retailer weighted objective with demand obtained from the consumer oracle.
pub fn oracle_weighted(
    people: &[ConsumerParams],
    weather: &[f64],
    cost: &DVector<f64>,
    pi: &DVector<f64>,
    eta: f64,
) -> f64 {
    let price = PriceVector::from_vector(pi.clone()).unwrap();
    people
        .iter()
        .map(|c| {
            let p = oracle_demand(c, weather, &price);
            let cs = -noiseless_cost(c, weather, &price, &p);
            (pi - cost).dot(&p) + eta * cs
        })
        .sum()
}

/// Value of moving the state of charge from `prev` to `next` in one hour at
/// price `price`, or `None` when the rate limits forbid it. Assumes a
/// positive price, so charging and discharging in the same hour never pays.
pub fn transition_value(bat: &BatteryParams, price: f64, prev: f64, next: f64) -> Option<f64> {
    let need = next / bat.storage_eff - prev;
    if need >= 0.0 {
        let buy = need / bat.charge_eff;
        (buy <= bat.charge_limit + 1e-12).then(|| -price * buy)
    } else {
        let sell = -need * bat.discharge_eff;
        (sell <= bat.discharge_limit + 1e-12).then_some(price * sell)
    }
}

fn path_value(bat: &BatteryParams, prices: &[f64], interior: &[f64]) -> Option<f64> {
    let mut prev = bat.initial;
    let mut total = 0.0;
    for (i, &p) in prices.iter().enumerate() {
        let next = if i + 1 == prices.len() { bat.initial } else { interior[i] };
        total += transition_value(bat, p, prev, next)?;
        prev = next;
    }
    Some(total)
}

/// Best arbitrage profit over state-of-charge paths on a grid of spacing
/// `step`, for two- or three-hour horizons.
pub fn battery_grid_oracle(prices: &[f64], bat: &BatteryParams, step: f64) -> f64 {
    let mut levels: Vec<f64> = (0..)
        .map(|k| k as f64 * step)
        .take_while(|b| *b < bat.capacity)
        .collect();
    levels.push(bat.capacity);
    let mut best = f64::NEG_INFINITY;
    match prices.len() {
        2 => {
            for &b1 in &levels {
                if let Some(v) = path_value(bat, prices, &[b1]) {
                    best = best.max(v);
                }
            }
        }
        3 => {
            for &b1 in &levels {
                for &b2 in &levels {
                    if let Some(v) = path_value(bat, prices, &[b1, b2]) {
                        best = best.max(v);
                    }
                }
            }
        }
        n => panic!("grid oracle supports 2 or 3 hours, got {n}"),
    }
    best
}

/// Best arbitrage profit over three-hour paths, refining a grid around the
/// incumbent until the spacing falls below `1e-10`.
pub fn battery_zoom_oracle(prices: &[f64; 3], bat: &BatteryParams) -> f64 {
    let cap = bat.capacity;
    let mut center = [cap / 2.0, cap / 2.0];
    let mut half = cap / 2.0;
    let mut best = f64::NEG_INFINITY;
    while half > 1e-10 {
        let step = half / 20.0;
        let mut next_center = center;
        for i in -20..=20 {
            for k in -20..=20 {
                let b1 = (center[0] + i as f64 * step).clamp(0.0, cap);
                let b2 = (center[1] + k as f64 * step).clamp(0.0, cap);
                if let Some(v) = path_value(bat, prices, &[b1, b2]) {
                    if v > best {
                        best = v;
                        next_center = [b1, b2];
                    }
                }
            }
        }
        center = next_center;
        half = 3.0 * step;
    }
    best
}

/// Consumer model for a noise-free consumer.
pub fn noiseless_model(params: &ConsumerParams, weather: &[f64]) -> AffineDemandModel {
    let m = build_consumer_model(params, weather).unwrap();
    AffineDemandModel::new(m.gain, m.intercept_mean, m.intercept_cov, m.cs_constant).unwrap()
}
