mod common;

use common::*;
use dahp_core::pricing::expected_cs;
use dahp_core::sim::{monte_carlo, simulate_day, Policy, SimSeed};
use dahp_core::{build_consumer_model, AffineDemandModel, DMatrix, DVector, PriceVector};

#[test]
fn mean_consumption_and_surplus_match_closed_forms() {
    let mut rng = rng(60);
    let weather = hot_day(24);
    for k in 0..3 {
        let params = random_consumer(&mut rng, 24, true);
        let model = build_consumer_model(&params, &weather).unwrap();
        let pi = random_prices(&mut rng, 24, 0.0, 1.0);
        let mc = monte_carlo(&params, Policy::Optimal, &pi, &weather, SimSeed::new(600 + k), 20_000).unwrap();

        let agg = AffineDemandModel::new(
            model.gain.clone(),
            model.intercept_mean.clone(),
            model.intercept_cov.clone(),
            model.cs_constant,
        )
        .unwrap();
        let want = agg.mean_demand(&pi).unwrap().values;
        for h in 0..24 {
            let z = (mc.mean_consumption[h] - want[h]) / mc.se_consumption[h];
            assert!(z.abs() < 4.5, "hour {h}: z = {z}");
        }
        let cs = expected_cs(&model, &pi).unwrap();
        let z = (mc.mean_surplus - cs) / mc.se_surplus;
        assert!(z.abs() < 4.5, "surplus z = {z}");
    }
}

#[test]
fn consumption_covariance_matches_model() {
    let mut rng = rng(61);
    let weather = hot_day(24);
    let params = random_consumer(&mut rng, 24, true);
    let model = build_consumer_model(&params, &weather).unwrap();
    let pi = PriceVector::new(two_peak_cost(24)).unwrap();
    let reps = 40_000;
    let mut sum = DVector::zeros(24);
    let mut outer = DMatrix::zeros(24, 24);
    for r in 0..reps {
        let day = simulate_day(&params, &pi, &weather, SimSeed::new(61).replicate(r)).unwrap();
        let p = DVector::from_vec(day.consumption);
        outer += &p * p.transpose();
        sum += p;
    }
    let n = reps as f64;
    let mean = &sum / n;
    let cov = (outer - &mean * mean.transpose() * n) / (n - 1.0);
    for i in 0..24usize {
        for k in i.saturating_sub(1)..(i + 2).min(24) {
            let want = model.intercept_cov[(i, k)];
            let sd = (model.intercept_cov[(i, i)] * model.intercept_cov[(k, k)]).sqrt();
            // Standard error of a sample covariance is at most sd·√(2/n).
            assert!(
                (cov[(i, k)] - want).abs() <= 5.0 * sd * (2.0 / n).sqrt(),
                "({i},{k}): {} vs {want}",
                cov[(i, k)]
            );
        }
    }
}

#[test]
fn optimal_policy_beats_thermostats() {
    let mut rng = rng(62);
    let weather = hot_day(24);
    let params = random_consumer(&mut rng, 24, true);
    let pi = PriceVector::new(two_peak_cost(24)).unwrap();
    let seed = SimSeed::new(62);
    let opt = monte_carlo(&params, Policy::Optimal, &pi, &weather, seed, 4000).unwrap();
    let t0 = monte_carlo(&params, Policy::Thermostat { tolerance: 0.0 }, &pi, &weather, seed, 4000).unwrap();
    let t2 = monte_carlo(&params, Policy::Thermostat { tolerance: 2.0 }, &pi, &weather, seed, 4000).unwrap();
    assert!(opt.mean_surplus >= t0.mean_surplus);
    assert!(t0.mean_surplus >= t2.mean_surplus);
    assert!(t2.mean_payment < t0.mean_payment);
    assert!(t2.mean_discomfort > t0.mean_discomfort);
}

#[test]
fn monte_carlo_is_reproducible() {
    let mut rng = rng(63);
    let weather = hot_day(24);
    let params = random_consumer(&mut rng, 24, true);
    let pi = PriceVector::new(two_peak_cost(24)).unwrap();
    let a = monte_carlo(&params, Policy::Optimal, &pi, &weather, SimSeed::new(5), 3000).unwrap();
    let b = monte_carlo(&params, Policy::Optimal, &pi, &weather, SimSeed::new(5), 3000).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo(&params, Policy::Optimal, &pi, &weather, SimSeed::new(6), 3000).unwrap();
    assert_ne!(a, c);
}
