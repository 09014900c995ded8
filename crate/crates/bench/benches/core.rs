use criterion::{criterion_group, criterion_main, Criterion};
use dahp_bench::{hot_day, model, population, two_peak_cost};
use dahp_core::pricing::{constrained_optimal_price, default_eta_grid, expected_cs, optimal_price, pareto_front};
use dahp_core::renewable::{optimal_price_renewable, RenewableModel};
use dahp_core::sim::{monte_carlo, simulate_day, Policy, SimSeed};
use dahp_core::storage::{
    arbitrage, optimize_price_with_storage, BatteryGroup, BatteryParams, BatteryPopulation, StorageSearchOptions,
};
use dahp_core::PriceVector;
use std::hint::black_box;

fn demand_model(c: &mut Criterion) {
    let people = population(50);
    let weather = hot_day();
    c.bench_function("aggregate_model_50", |b| {
        b.iter(|| dahp_core::AffineDemandModel::from_consumers(black_box(&people), &weather).unwrap())
    });
}

fn pricing(c: &mut Criterion) {
    let m = model(50);
    let cost = two_peak_cost();
    let grid = default_eta_grid();
    c.bench_function("pareto_front_101", |b| b.iter(|| pareto_front(&m, &cost, black_box(&grid)).unwrap()));
    let tau = expected_cs(&m, &optimal_price(&m, &cost, 0.4).unwrap()).unwrap();
    c.bench_function("constrained_price", |b| {
        b.iter(|| constrained_optimal_price(&m, &cost, black_box(tau)).unwrap())
    });
}

fn renewable(c: &mut Criterion) {
    let m = model(50);
    let cost = two_peak_cost();
    let mean = m.mean_demand(&optimal_price(&m, &cost, 0.5).unwrap()).unwrap().values.mean();
    let renew = RenewableModel::free(2.0 * mean, 24).unwrap();
    c.bench_function("renewable_price", |b| {
        b.iter(|| optimal_price_renewable(&m, &cost, &renew, black_box(0.5)).unwrap())
    });
}

fn storage(c: &mut Criterion) {
    let cost = two_peak_cost();
    let pi = PriceVector::from_vector(cost.mean().clone()).unwrap();
    let bat = BatteryParams {
        capacity: 13.5,
        initial: 0.0,
        storage_eff: 0.999,
        charge_eff: 0.95,
        discharge_eff: 0.95,
        charge_limit: 5.0,
        discharge_limit: 5.0,
    };
    c.bench_function("battery_lp_24h", |b| b.iter(|| arbitrage(black_box(&pi), &bat).unwrap()));

    let m = model(50);
    let fleet = BatteryPopulation::new(vec![BatteryGroup { params: bat, count: 13 }]).unwrap();
    let opts = StorageSearchOptions {
        max_evals: 500,
        ..Default::default()
    };
    let mut group = c.benchmark_group("storage_search");
    group.sample_size(10);
    group.bench_function("500_evals", |b| {
        b.iter(|| optimize_price_with_storage(&m, &cost, &fleet, black_box(0.5), opts).unwrap())
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let params = &population(1)[0];
    let weather = hot_day();
    let pi = PriceVector::from_vector(two_peak_cost().mean().clone()).unwrap();
    c.bench_function("simulate_day", |b| {
        b.iter(|| simulate_day(params, &pi, &weather, black_box(SimSeed::new(1))).unwrap())
    });
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("10k_days", |b| {
        b.iter(|| monte_carlo(params, Policy::Optimal, &pi, &weather, SimSeed::new(2), black_box(10_000)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, demand_model, pricing, renewable, storage, simulation);
criterion_main!(benches);
