mod common;

use common::*;
use dahp_core::optim::SpdFactorization;
use dahp_core::pricing::{expected_cs, expected_rp, expected_sw, frontier_profit, optimal_price, WholesaleCost};
use dahp_core::renewable::{benefit_split, RenewableModel};
use dahp_core::storage::{arbitrage, consumer_surplus_with_storage, BatteryParams};
use dahp_core::model::consumer_gain;
use dahp_core::{build_consumer_model, AffineDemandModel, ConsumerParams, PriceVector};
use proptest::prelude::*;
use rand::SeedableRng;

fn params_strategy() -> impl Strategy<Value = ConsumerParams> {
    (0.05f64..0.95, 0.02f64..0.3, any::<bool>(), 0.1f64..2.0, 16.0f64..24.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(
        |(alpha, beta, heating, mu, t, w, v)| ConsumerParams {
            alpha,
            beta: if heating { -beta } else { beta },
            mu,
            desired_temp: vec![t; 24],
            process_noise_var: w,
            obs_noise_var: v,
        },
    )
}

fn price_strategy() -> impl Strategy<Value = PriceVector> {
    prop::collection::vec(0.0f64..1.0, 24).prop_map(|v| PriceVector::new(v).unwrap())
}

fn model_from_seed(seed: u64, count: usize) -> AffineDemandModel {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_model(&mut r, count, 24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn demand_is_affine(params in params_strategy(), a in price_strategy(), b in price_strategy(), t in 0.0f64..1.0) {
        let model = build_consumer_model(&params, &hot_day(24)).unwrap();
        let agg = AffineDemandModel::deterministic(model.gain.clone(), model.intercept_mean.clone()).unwrap();
        let mix = PriceVector::from_vector(a.as_vector() * t + b.as_vector() * (1.0 - t)).unwrap();
        let da = agg.mean_demand(&a).unwrap().values;
        let db = agg.mean_demand(&b).unwrap().values;
        let dm = agg.mean_demand(&mix).unwrap().values;
        let want = da * t + db * (1.0 - t);
        prop_assert!((dm - &want).amax() <= 1e-9 * (1.0 + want.amax()));
    }

    #[test]
    fn gain_is_positive_definite(params in params_strategy()) {
        let g = consumer_gain(&params);
        prop_assert!(SpdFactorization::new(&g).is_ok());
        let eig = g.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn welfare_peaks_at_wholesale_cost(seed in any::<u64>(), pi in price_strategy()) {
        let model = model_from_seed(seed, 3);
        let cost = WholesaleCost::new(two_peak_cost(24)).unwrap();
        let best = optimal_price(&model, &cost, 1.0).unwrap();
        let top = expected_sw(&model, &best, &cost).unwrap();
        prop_assert!(expected_sw(&model, &pi, &cost).unwrap() <= top + 1e-9 * top.abs().max(1.0));
    }

    #[test]
    fn no_price_beats_the_front(seed in any::<u64>(), pi in price_strategy()) {
        let model = model_from_seed(seed, 3);
        let cost = WholesaleCost::new(two_peak_cost(24)).unwrap();
        let cs = expected_cs(&model, &pi).unwrap();
        let rp = expected_rp(&model, &pi, &cost).unwrap();
        if let Ok(bound) = frontier_profit(&model, &cost, cs) {
            prop_assert!(rp <= bound + 1e-9 * bound.abs().max(1.0));
        }
    }

    #[test]
    fn renewables_raise_profit(seed in any::<u64>(), k in 0.05f64..5.0, eta in 0.0f64..1.0) {
        let model = model_from_seed(seed, 3);
        let cost = WholesaleCost::new(two_peak_cost(24)).unwrap();
        let base = optimal_price(&model, &cost, eta).unwrap();
        let scale = model.mean_demand(&base).unwrap().values.mean();
        let renew = RenewableModel::free(k * scale, 24).unwrap();
        let split = benefit_split(&model, &cost, &renew, eta).unwrap();
        prop_assert!(split.delta_rp > 0.0, "{split:?}");
        prop_assert!((0.0..1.0).contains(&split.fraction));
    }

    #[test]
    fn storage_never_hurts_consumers(
        params in params_strategy(),
        pi in price_strategy(),
        cap in 0.0f64..20.0,
        fill in 0.0f64..1.0,
        limit in 0.0f64..8.0,
        effs in (0.8f64..=1.0, 0.8f64..=1.0),
    ) {
        let bat = BatteryParams {
            capacity: cap,
            initial: cap * fill,
            storage_eff: 1.0,
            charge_eff: effs.0,
            discharge_eff: effs.1,
            charge_limit: limit,
            discharge_limit: limit,
        };
        let model = build_consumer_model(&params, &hot_day(24)).unwrap();
        let plan = arbitrage(&pi, &bat).unwrap();
        prop_assert!(plan.profit >= -1e-12);
        prop_assert!(plan.max_violation(&bat) <= 1e-9);
        let with = consumer_surplus_with_storage(&model, &pi, &bat).unwrap();
        let gap = with - expected_cs(&model, &pi).unwrap();
        prop_assert!((gap - plan.profit).abs() <= 1e-9 * (1.0 + with.abs()));
    }
}
