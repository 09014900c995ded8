//! Command dispatch: load config and data, run one experiment, write CSVs
//! and `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dahp_core::pricing::{self, benchmark_trace, BenchmarkScheme, WholesaleCost};
use dahp_core::renewable::{benefit_split, RenewableModel};
use dahp_core::sim::{baseline_thermostat, simulate_day, DayResult, SimSeed};
use dahp_core::storage::{optimize_price_with_storage, BatteryPopulation, StorageSearchOptions};
use dahp_core::{AffineDemandModel, ConsumerParams, PriceVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, SimulatedPrice};
use crate::data::{load_series, mean_profile, HourlySeries, SeriesKind, Unit};
use crate::error::{CliError, CliResult};
use crate::output::{fmt, sha256_hex, write_file, write_table, InputRecord, Manifest, OutputRecord, Table};
use crate::synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pareto,
    Benchmarks,
    Renewable,
    Storage,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pareto => "pareto",
            Command::Benchmarks => "benchmarks",
            Command::Renewable => "renewable",
            Command::Storage => "storage",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub command: Command,
    pub out_dir: PathBuf,
    pub outputs: Vec<OutputRecord>,
}

/// Everything a command needs besides the config.
pub struct Inputs {
    pub seed: u64,
    pub people: Vec<ConsumerParams>,
    pub weather: Vec<f64>,
    pub cost: WholesaleCost,
    pub model: AffineDemandModel,
    pub records: Vec<InputRecord>,
}

fn read_days(
    role: &str,
    file: Option<&PathBuf>,
    base: &Path,
    kind: SeriesKind,
    synthetic: impl FnOnce() -> Vec<HourlySeries>,
) -> CliResult<(Vec<HourlySeries>, InputRecord)> {
    match file {
        Some(f) => {
            let path = ExperimentConfig::resolve(base, f);
            let bytes = std::fs::read(&path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            let days = load_series(&path, kind)?;
            let rec = InputRecord {
                role: role.to_string(),
                source: sha256_hex(&bytes),
                days: days.len(),
            };
            Ok((days, rec))
        }
        None => {
            let days = synthetic();
            let rec = InputRecord {
                role: role.to_string(),
                source: "synthetic".to_string(),
                days: days.len(),
            };
            Ok((days, rec))
        }
    }
}

/// Loads data and builds the aggregate demand model.
pub fn prepare(cfg: &ExperimentConfig, base: &Path) -> CliResult<Inputs> {
    let seed = cfg.seed()?;
    let people = cfg.consumers(seed)?;
    let (weather_days, weather_rec) = read_days("weather", cfg.weather.file.as_ref(), base, SeriesKind::Weather, || {
        synthetic::weather_days(cfg.weather.days.unwrap_or(1), seed)
    })?;
    let unit = cfg.cost.unit.unwrap_or(Unit::UsdPerMwh);
    let (cost_days, cost_rec) = read_days("cost", cfg.cost.file.as_ref(), base, SeriesKind::Price(unit), || {
        synthetic::price_days(cfg.cost.days.unwrap_or(1), seed)
    })?;
    let weather = mean_profile(&weather_days);
    let cost = WholesaleCost::from_samples(cost_days.into_iter().map(|d| d.values).collect())
        .map_err(|e| CliError::data(format!("wholesale cost: {e}")))?;
    let model = AffineDemandModel::from_consumers(&people, &weather)?;
    Ok(Inputs {
        seed,
        people,
        weather,
        cost,
        model,
        records: vec![weather_rec, cost_rec],
    })
}

fn prices_of(p: &PriceVector) -> impl Iterator<Item = String> + '_ {
    p.as_slice().iter().map(|v| fmt(*v))
}

pub fn pareto(cfg: &ExperimentConfig, inp: &Inputs) -> CliResult<Vec<Table>> {
    let front = pricing::pareto_front(&inp.model, &inp.cost, &cfg.pareto_grid())?;
    let mut t = Table::new("tradeoff.csv", &["eta", "cs", "rp", "sw"]).with_prices();
    for p in &front {
        let mut row = vec![fmt(p.eta), fmt(p.cs), fmt(p.rp), fmt(p.sw)];
        row.extend(prices_of(&p.price));
        t.push(row);
    }
    Ok(vec![t])
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Markup sweep with the grid point nearest 1 moved onto 1 exactly.
fn markup_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g = linspace(lo, hi, n);
    let nearest = (0..n)
        .min_by(|&a, &b| (g[a] - 1.0).abs().total_cmp(&(g[b] - 1.0).abs()))
        .expect("non-empty sweep");
    g[nearest] = 1.0;
    g
}

pub fn benchmarks(cfg: &ExperimentConfig, inp: &Inputs) -> CliResult<(Vec<Table>, serde_json::Value)> {
    let b = &cfg.benchmarks;
    let lam = inp.cost.mean();
    let choke = inp.model.zero_demand_price().mean();
    let lo = 0.5 * lam.min();
    let hi = choke.max(2.0 * lam.max());
    let cp = b.cp_range.unwrap_or([lo, hi]);
    let tou = b.tou_range.unwrap_or([lo, hi / b.tou_ratio.max(1.0)]);
    let pmp = b.pmp_range.unwrap_or([0.5, (hi / lam.mean()).max(2.0)]);

    let mut tables = Vec::new();
    let mut t = Table::new("benchmark_dahp.csv", &["param", "cs", "rp"]);
    for p in pricing::pareto_front(&inp.model, &inp.cost, &pricing::eta_grid(b.eta_points))? {
        t.push(vec![fmt(p.eta), fmt(p.cs), fmt(p.rp)]);
    }
    tables.push(t);

    let schemes = [
        (BenchmarkScheme::Constant, linspace(cp[0], cp[1], b.points)),
        (
            BenchmarkScheme::TimeOfUse {
                ratio: b.tou_ratio,
                peak_start: b.tou_peak[0],
                peak_end: b.tou_peak[1],
            },
            linspace(tou[0], tou[1], b.points),
        ),
        (BenchmarkScheme::ProportionalMarkup, markup_sweep(pmp[0], pmp[1], b.points)),
    ];
    for (scheme, sweep) in schemes {
        let mut t = Table::new(&format!("benchmark_{}.csv", scheme.name()), &["param", "cs", "rp"]);
        for p in benchmark_trace(&inp.model, &inp.cost, scheme, &sweep)? {
            t.push(vec![fmt(p.param), fmt(p.cs), fmt(p.rp)]);
        }
        tables.push(t);
    }
    let details = json!({ "cp_range": cp, "tou_range": tou, "pmp_range": pmp });
    Ok((tables, details))
}

pub fn renewable(cfg: &ExperimentConfig, inp: &Inputs) -> CliResult<Vec<Table>> {
    let r = &cfg.renewable;
    let nu = r.marginal_cost.expand("renewable.marginal_cost")?;
    let cases: Vec<(f64, f64)> = r
        .eta
        .iter()
        .flat_map(|&eta| r.capacity.iter().map(move |&k| (eta, k)))
        .collect();
    let rows = cases
        .par_iter()
        .map(|&(eta, k)| -> CliResult<Vec<String>> {
            let capacity = if r.relative_capacity {
                let base = pricing::optimal_price(&inp.model, &inp.cost, eta)?;
                k * inp.model.mean_demand(&base)?.values.mean()
            } else {
                k
            };
            let renew = RenewableModel::new(capacity, nu.clone())?;
            let split = benefit_split(&inp.model, &inp.cost, &renew, eta)?;
            Ok(vec![fmt(eta), fmt(capacity), fmt(split.delta_cs), fmt(split.delta_rp), fmt(split.fraction)])
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut t = Table::new("renewable.csv", &["eta", "K", "delta_cs", "delta_rp", "fraction"]);
    rows.into_iter().for_each(|row| t.push(row));
    Ok(vec![t])
}

pub fn storage(cfg: &ExperimentConfig, inp: &Inputs) -> CliResult<(Vec<Table>, serde_json::Value)> {
    let s = &cfg.storage;
    let population = BatteryPopulation::new(cfg.battery_groups(inp.people.len()))?;
    let opts = StorageSearchOptions {
        step_rel: s.step_rel,
        step_min_rel: s.step_min_rel,
        max_evals: s.max_evals,
    };
    let mut t = Table::new("storage.csv", &["eta", "cs", "rp", "arbitrage_volume"]).with_prices();
    let mut details = Vec::new();
    for &eta in &s.eta {
        let opt = optimize_price_with_storage(&inp.model, &inp.cost, &population, eta, opts)?;
        let mut row = vec![fmt(eta), fmt(opt.point.cs), fmt(opt.point.rp), fmt(opt.arbitrage_volume)];
        row.extend(prices_of(&opt.point.price));
        t.push(row);
        details.push(json!({
            "eta": eta,
            "improved": opt.improved,
            "objective": opt.objective,
            "seed_objective": opt.seed_objective,
            "starts": opt.starts.iter().map(|st| json!({
                "objective": st.objective,
                "evaluations": st.evaluations,
                "moves": st.moves,
                "truncated": st.truncated,
            })).collect::<Vec<_>>(),
        }));
    }
    Ok((vec![t], json!({ "batteries": population.total_count(), "search": details })))
}

fn day_row(prefix: Vec<String>, day: &DayResult) -> Vec<String> {
    let mut row = prefix;
    row.extend([fmt(day.payment), fmt(day.discomfort), fmt(day.surplus)]);
    row
}

pub fn simulate(cfg: &ExperimentConfig, inp: &Inputs) -> CliResult<(Vec<Table>, serde_json::Value)> {
    let sim = &cfg.simulate;
    let price = match sim.price {
        SimulatedPrice::Wholesale => PriceVector::from_vector(inp.cost.mean().clone())?,
        SimulatedPrice::Optimal => pricing::optimal_price(&inp.model, &inp.cost, sim.eta)?,
    };
    let seed = SimSeed::new(inp.seed);
    let run = |tolerance: Option<f64>| -> CliResult<Vec<Vec<String>>> {
        let per_consumer = inp
            .people
            .par_iter()
            .enumerate()
            .map(|(j, params)| -> CliResult<Vec<Vec<String>>> {
                (0..sim.days)
                    .map(|d| {
                        let s = seed.replicate(d).consumer(j as u64);
                        let day = match tolerance {
                            None => simulate_day(params, &price, &inp.weather, s)?,
                            Some(tol) => baseline_thermostat(params, tol, &price, &inp.weather, s)?,
                        };
                        let mut prefix = vec![j.to_string(), d.to_string()];
                        if let Some(tol) = tolerance {
                            prefix.push(fmt(tol));
                        }
                        Ok(day_row(prefix, &day))
                    })
                    .collect()
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(per_consumer.into_iter().flatten().collect())
    };

    let mut tables = Vec::new();
    let mut t = Table::new("simulate.csv", &["consumer_id", "day", "payment", "discomfort", "surplus"]);
    run(None)?.into_iter().for_each(|r| t.push(r));
    tables.push(t);
    if !sim.tolerances.is_empty() {
        let mut b = Table::new(
            "simulate_baseline.csv",
            &["consumer_id", "day", "tolerance", "payment", "discomfort", "surplus"],
        );
        for &tol in &sim.tolerances {
            run(Some(tol))?.into_iter().for_each(|r| b.push(r));
        }
        tables.push(b);
    }
    Ok((tables, json!({ "price": price.as_slice() })))
}

/// SHA-256 of the effective configuration with the output directory removed.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    sha256_hex(&bytes)
}

pub fn run(command: Command, opts: &RunOptions) -> CliResult<RunSummary> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    cfg.validate()?;
    let base = opts.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = match (&opts.out, &cfg.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => ExperimentConfig::resolve(&base, o),
        (None, None) => base.join("results"),
    };
    let inputs = prepare(&cfg, &base)?;
    let (tables, details) = match command {
        Command::Pareto => (pareto(&cfg, &inputs)?, serde_json::Value::Null),
        Command::Benchmarks => benchmarks(&cfg, &inputs)?,
        Command::Renewable => (renewable(&cfg, &inputs)?, serde_json::Value::Null),
        Command::Storage => storage(&cfg, &inputs)?,
        Command::Simulate => simulate(&cfg, &inputs)?,
    };

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out_dir.display())))?;
    let outputs = tables
        .iter()
        .map(|t| write_table(&out_dir, t))
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = Manifest {
        command: command.name().to_string(),
        dahp_cli_version: env!("CARGO_PKG_VERSION").to_string(),
        dahp_core_version: dahp_core::VERSION.to_string(),
        seed: inputs.seed,
        config_sha256: config_hash(&cfg),
        inputs: inputs.records.clone(),
        outputs: outputs.clone(),
        details,
        wall_time_ms: cfg.record_wall_time.then(|| started.elapsed().as_millis()),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&out_dir, "manifest.json", text.as_bytes())?;
    Ok(RunSummary {
        command,
        out_dir,
        outputs,
    })
}
