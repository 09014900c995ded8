mod common;

use common::*;
use dahp_core::optim::{simplex_solve, LpProblem};
use dahp_core::pricing::{self, WholesaleCost};
use dahp_core::storage::{
    arbitrage, consumer_surplus_with_storage, evaluate_with_storage, optimize_price_with_storage,
    retailer_objective_with_storage, BatteryGroup, BatteryParams, BatteryPopulation,
    StorageSearchOptions,
};
use dahp_core::{build_consumer_model, AffineDemandModel, ConsumerParams, DVector, PriceVector};
use rand::Rng;

fn prices(v: &[f64]) -> PriceVector {
    PriceVector::with_horizon(v.to_vec()).unwrap()
}

fn random_lossy(rng: &mut impl Rng) -> BatteryParams {
    let capacity = (rng.random_range(0.5..2.0) * 100.0_f64).round() / 100.0;
    BatteryParams {
        capacity,
        initial: (rng.random_range(0.0..capacity) * 100.0_f64).round() / 100.0,
        storage_eff: rng.random_range(0.9..1.0),
        charge_eff: rng.random_range(0.85..1.0),
        discharge_eff: rng.random_range(0.85..1.0),
        charge_limit: rng.random_range(0.3..1.5),
        discharge_limit: rng.random_range(0.3..1.5),
    }
}

#[test]
fn two_hour_lossless_toy_matches_grid() {
    let bat = BatteryParams::lossless(1.0, 0.0, 1.0);
    let plan = arbitrage(&prices(&[0.1, 0.3]), &bat).unwrap();
    let grid = battery_grid_oracle(&[0.1, 0.3], &bat, 0.01);
    assert!((grid - 0.2).abs() < 1e-12);
    assert!((plan.profit - grid).abs() < 1e-12);
    assert!(plan.max_violation(&bat) < 1e-9);
}

#[test]
fn lossy_three_hour_instances_match_grid() {
    let mut rng = rng(90);
    let step = 0.01;
    let mut checked = 0;
    while checked < 50 {
        let bat = random_lossy(&mut rng);
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(0.02..0.3)).collect();
        let plan = match arbitrage(&prices(&p), &bat) {
            Ok(plan) => plan,
            Err(_) => continue,
        };
        let grid = battery_grid_oracle(&p, &bat, step);
        // Moving both interior charge levels by one grid step changes the
        // value by at most this much.
        let slack = 4.0 * step * p.iter().cloned().fold(0.0, f64::max)
            / (bat.storage_eff * bat.charge_eff * bat.discharge_eff);
        assert!(plan.max_violation(&bat) < 1e-9);
        assert!(grid <= plan.profit + 1e-9, "grid {grid} beats LP {}", plan.profit);
        assert!(plan.profit - grid <= slack, "LP {} vs grid {grid}", plan.profit);
        checked += 1;
    }
}

#[test]
fn lossy_battery_breakeven_matches_brute_force() {
    let bat = BatteryParams {
        storage_eff: 0.9,
        charge_eff: 0.9,
        discharge_eff: 0.9,
        ..BatteryParams::lossless(1.0, 0.0, 1.0)
    };
    for k in 0..40 {
        let ratio = 1.0 + k as f64 * 0.02;
        let p = [0.1, 0.1 * ratio];
        let plan = arbitrage(&prices(&p), &bat).unwrap();
        let grid = battery_grid_oracle(&p, &bat, 0.001);
        assert!((plan.profit - grid).abs() < 1e-9, "ratio {ratio}");
        if grid == 0.0 {
            assert!(plan.charge.amax() < 1e-12 && plan.discharge.amax() < 1e-12);
        }
    }
}

#[test]
fn lp_beats_random_feasible_plans() {
    let mut rng = rng(91);
    for _ in 0..5 {
        let bat = BatteryParams {
            initial: 0.0,
            ..random_lossy(&mut rng)
        };
        let p: Vec<f64> = (0..24).map(|_| rng.random_range(0.02..0.3)).collect();
        let plan = arbitrage(&prices(&p), &bat).unwrap();

        // Charge levels from which the initial level is still reachable.
        let mut back = vec![(bat.initial, bat.initial); 25];
        for i in (0..24).rev() {
            let (lo, hi) = back[i + 1];
            back[i] = (
                (lo / bat.storage_eff - bat.charge_eff * bat.charge_limit).max(0.0),
                (hi / bat.storage_eff + bat.discharge_limit / bat.discharge_eff).min(bat.capacity),
            );
        }
        for _ in 0..2000 {
            let mut prev = bat.initial;
            let mut value = 0.0;
            for i in 0..24 {
                let lo = (bat.storage_eff * (prev - bat.discharge_limit / bat.discharge_eff))
                    .max(back[i + 1].0)
                    .max(0.0);
                let hi = (bat.storage_eff * (prev + bat.charge_eff * bat.charge_limit))
                    .min(back[i + 1].1)
                    .min(bat.capacity);
                let next = if i == 23 { bat.initial } else { rng.random_range(lo..=hi.max(lo)) };
                value += transition_value(&bat, p[i], prev, next).expect("projected plan is feasible");
                prev = next;
            }
            assert!(value <= plan.profit + 1e-9);
        }
    }
}

#[test]
fn separation_matches_joint_hvac_battery_optimum() {
    let mut rng = rng(92);
    let weather = hot_day(3);
    for _ in 0..5 {
        let params = random_consumer(&mut rng, 3, false);
        let bat = random_lossy(&mut rng);
        let p = [rng.random_range(0.02..0.1), rng.random_range(0.1..0.3), rng.random_range(0.02..0.3)];
        let pi = prices(&p);
        if arbitrage(&pi, &bat).is_err() {
            continue;
        }
        let model = build_consumer_model(&params, &weather).unwrap();
        let got = consumer_surplus_with_storage(&model, &pi, &bat).unwrap();
        // Joint maximization over consumption and charge levels.
        let hvac = oracle_surplus(&params, &weather, &pi);
        let joint = hvac + battery_zoom_oracle(&p, &bat);
        assert!((got - joint).abs() <= 1e-4 * (1.0 + joint.abs()), "{got} vs {joint}");
    }
}

#[test]
fn idle_cases_leave_surplus_unchanged() {
    let params = ConsumerParams {
        alpha: 0.5,
        beta: 0.1,
        mu: 0.5,
        desired_temp: vec![19.0; 24],
        process_noise_var: 0.2,
        obs_noise_var: 0.1,
    };
    let model = build_consumer_model(&params, &hot_day(24)).unwrap();
    let spread = prices(&two_peak_cost(24));
    let empty = BatteryParams::lossless(0.0, 0.0, 2.0);
    assert_eq!(
        consumer_surplus_with_storage(&model, &spread, &empty).unwrap(),
        pricing::expected_cs(&model, &spread).unwrap()
    );
    let flat = PriceVector::constant(24, 0.07).unwrap();
    let bat = BatteryParams::lossless(5.0, 2.0, 1.0);
    let got = consumer_surplus_with_storage(&model, &flat, &bat).unwrap();
    assert!((got - pricing::expected_cs(&model, &flat).unwrap()).abs() < 1e-9);
}

#[test]
fn lp_handles_redundant_battery_rows() {
    // Same program as the battery LP but built by hand with a duplicated
    // terminal row.
    let n = 2;
    let mut a = dahp_core::DMatrix::zeros(n + 2, 3 * n);
    a[(0, 0)] = -1.0;
    a[(0, 2)] = 1.0;
    a[(0, 4)] = 1.0;
    a[(1, 1)] = -1.0;
    a[(1, 3)] = 1.0;
    a[(1, 4)] = -1.0;
    a[(1, 5)] = 1.0;
    a[(2, 5)] = 1.0;
    a[(3, 5)] = 1.0;
    let lp = LpProblem::new(
        DVector::from_vec(vec![-0.1, -0.3, 0.1, 0.3, 0.0, 0.0]),
        a,
        DVector::zeros(n + 2),
        DVector::zeros(3 * n),
        DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
    )
    .unwrap();
    let sol = simplex_solve(&lp).unwrap();
    assert!((sol.objective - 0.2).abs() < 1e-12);
}

fn toy_model() -> (AffineDemandModel, WholesaleCost) {
    let params = ConsumerParams {
        alpha: 0.5,
        beta: 0.1,
        mu: 0.5,
        desired_temp: vec![18.0, 18.0],
        process_noise_var: 0.0,
        obs_noise_var: 0.0,
    };
    let model = noiseless_model(&params, &[30.0, 34.0]);
    (model, WholesaleCost::new(vec![0.04, 0.09]).unwrap())
}

#[test]
fn retailer_objective_matches_recomputation() {
    let (model, cost) = toy_model();
    let params = ConsumerParams {
        alpha: 0.5,
        beta: 0.1,
        mu: 0.5,
        desired_temp: vec![18.0, 18.0],
        process_noise_var: 0.0,
        obs_noise_var: 0.0,
    };
    let weather = [30.0, 34.0];
    let bat = BatteryParams::lossless(3.0, 0.0, 2.5);
    let pop = BatteryPopulation::new(vec![BatteryGroup { params: bat, count: 4 }]).unwrap();
    for (p, eta) in [([0.5, 0.9], 0.0), ([0.9, 0.5], 0.3), ([0.7, 0.7], 1.0)] {
        let pi = prices(&p);
        let got = retailer_objective_with_storage(&model, &cost, &pop, &pi, eta).unwrap();
        // Lossless two-hour battery from empty: charge to the rate limit in
        // the cheap hour when the later hour is dearer.
        let flow = if p[1] > p[0] { bat.charge_limit.min(bat.capacity) * 4.0 } else { 0.0 };
        let net = DVector::from_vec(vec![flow, -flow]);
        let lam = cost.mean();
        let pv = DVector::from_vec(p.to_vec());
        let hvac = oracle_weighted(&[params.clone()], &weather, lam, &pv, eta);
        let want = hvac + (&pv - lam).dot(&net) - eta * pv.dot(&net);
        assert!((got - want).abs() < 1e-6 * (1.0 + want.abs()), "{got} vs {want}");
    }
}

#[test]
fn zero_capacity_population_returns_storage_free_price() {
    let mut rng = rng(93);
    let model = random_model(&mut rng, 5, 24);
    let cost = WholesaleCost::new(two_peak_cost(24)).unwrap();
    let pop = BatteryPopulation::new(vec![BatteryGroup {
        params: BatteryParams::lossless(0.0, 0.0, 1.0),
        count: 10,
    }])
    .unwrap();
    for eta in [0.0, 0.6] {
        let opt = optimize_price_with_storage(&model, &cost, &pop, eta, StorageSearchOptions::default()).unwrap();
        assert_eq!(opt.point.price, pricing::optimal_price(&model, &cost, eta).unwrap());
        assert!(!opt.improved);
        assert_eq!(opt.arbitrage_volume, 0.0);
    }
}

#[test]
fn two_hour_price_search_matches_grid() {
    let (model, cost) = toy_model();
    let pop = BatteryPopulation::new(vec![BatteryGroup {
        params: BatteryParams::lossless(4.0, 0.0, 4.0),
        count: 1,
    }])
    .unwrap();
    let eta = 0.5;
    let opt = optimize_price_with_storage(&model, &cost, &pop, eta, StorageSearchOptions::default()).unwrap();
    assert!(opt.objective >= opt.seed_objective);

    let seed = pricing::optimal_price(&model, &cost, eta).unwrap();
    let cell = 0.001;
    let span = 150;
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    for i in -span..=span {
        for k in -span..=span {
            let p = [seed[0] + i as f64 * cell, seed[1] + k as f64 * cell];
            let v = evaluate_with_storage(&model, &cost, &pop, &prices(&p), eta).unwrap().objective;
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    let found = opt.point.price.as_slice();
    assert!(opt.objective >= best.0 - 1e-9, "{} < grid {}", opt.objective, best.0);
    for h in 0..2 {
        assert!((found[h] - best.1[h]).abs() <= cell, "hour {h}: {} vs {}", found[h], best.1[h]);
    }
}

#[test]
fn day_ahead_search_never_loses_to_seed() {
    let mut rng = rng(94);
    let model = random_model(&mut rng, 20, 24);
    let cost = WholesaleCost::new(two_peak_cost(24)).unwrap();
    let pop = BatteryPopulation::new(vec![
        BatteryGroup { params: BatteryParams::lossless(10.0, 0.0, 3.0), count: 5 },
        BatteryGroup {
            params: BatteryParams {
                storage_eff: 0.99,
                charge_eff: 0.95,
                discharge_eff: 0.95,
                ..BatteryParams::lossless(13.5, 5.0, 5.0)
            },
            count: 3,
        },
    ])
    .unwrap();
    let start = std::time::Instant::now();
    let opt = optimize_price_with_storage(&model, &cost, &pop, 0.5, StorageSearchOptions::default()).unwrap();
    eprintln!(
        "search: {:?}, evals {:?}, improved {}",
        start.elapsed(),
        opt.starts.iter().map(|s| s.evaluations).collect::<Vec<_>>(),
        opt.improved
    );
    assert!(opt.objective >= opt.seed_objective);
    for s in &opt.starts {
        assert!(s.trace.windows(2).all(|w| w[1] > w[0]));
    }
}
