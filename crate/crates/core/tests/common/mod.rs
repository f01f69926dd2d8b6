//! Seeded toy instances small enough to enumerate exhaustively.
#![allow(dead_code)]

use omplan_core::instance::Instance;
use omplan_core::model::{
    Catalog, DesalinationUnit, DispatchableUnit, EconomicParams, ForecastSet, InvestmentPlan, RenewableKind,
    RenewableUnit, StorageUnit, TidalUnit, TimeGrid,
};
use omplan_core::robust::{worst_case, WorstCaseMethod};
use omplan_core::solver::MilpBackend;
use omplan_core::uncertainty::UncertaintyConfig;
use omplan_core::model::investment_cost;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Basin area giving roughly 1 MW at a 2 m head with unit efficiency.
pub const TOY_AREA: f64 = 1.8e5;

pub fn desal(daily_demand: f64) -> DesalinationUnit {
    DesalinationUnit { rated_capacity: 2.0, inv_cost: 10.0, op_cost: 1.0, power_per_ton: 0.1, daily_demand }
}

pub fn du(id: &str, rated_power: f64, op_cost: f64, inv_cost: f64) -> DispatchableUnit {
    DispatchableUnit { id: id.into(), rated_power, op_cost, inv_cost }
}

pub fn tpg(id: &str, rated_power: f64, inv_cost: f64) -> TidalUnit {
    TidalUnit { id: id.into(), rated_power, inv_cost, area: TOY_AREA, efficiency: 1.0, op_cost: 0.0 }
}

pub fn ess(id: &str, rated_power: f64, rated_energy: f64) -> StorageUnit {
    StorageUnit {
        id: id.into(),
        rated_power,
        rated_energy,
        inv_cost_power: 40.0,
        inv_cost_energy: 20.0,
        efficiency: 0.9,
    }
}

/// Single-day, single-year instance with the given hourly load and tide.
pub fn single_day(catalog: Catalog, load: Vec<f64>, tide: Vec<f64>, uncertainty: UncertaintyConfig) -> Instance {
    let grid = TimeGrid::new(load.len(), 1, 1).unwrap();
    let ndu = catalog.renewable.iter().map(|u| vec![u.rated_power * 0.5; load.len()]).collect();
    let forecasts = ForecastSet { load, ndu_availability: ndu, tidal_height: tide };
    let econ = EconomicParams { shed_penalty: 1e3, ..Default::default() };
    Instance::new(catalog, grid, econ, forecasts, uncertainty).unwrap()
}

/// γ that yields an integer budget of exactly `count` over `hours` slots.
pub fn gamma_for(count: usize, hours: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        (count as f64 + 0.5) / hours as f64
    }
}

/// A random instance with H ≤ 6, one day, one year, three candidate devices
/// and load and tidal budgets of at most two deviations each.
pub fn random_toy(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hours = rng.gen_range(3..=6);
    let load: Vec<f64> = (0..hours).map(|_| rng.gen_range(1.0..5.0)).collect();
    let tide: Vec<f64> = (0..hours).map(|_| rng.gen_range(0.0..3.0)).collect();
    let peak = load.iter().copied().fold(0.0, f64::max);

    let mut catalog = Catalog {
        dispatchable: vec![du("du1", peak * rng.gen_range(1.0..1.3), rng.gen_range(80.0..150.0), rng.gen_range(50.0..200.0))],
        renewable: vec![],
        storage: vec![],
        tidal: vec![],
        desalination: desal(rng.gen_range(0.0..hours as f64)),
    };
    // Always one tidal unit so tidal deviations are exercised.
    catalog.tidal.push(tpg("tpg1", rng.gen_range(0.5..2.0), rng.gen_range(50.0..300.0)));
    match rng.gen_range(0..3) {
        0 => catalog.dispatchable.push(du("du2", peak * rng.gen_range(0.3..0.8), rng.gen_range(20.0..80.0), rng.gen_range(100.0..400.0))),
        1 => catalog.storage.push(ess("ess1", rng.gen_range(0.5..2.0), rng.gen_range(1.0..4.0))),
        _ => catalog.renewable.push(RenewableUnit {
            id: "pv1".into(),
            rated_power: rng.gen_range(1.0..3.0),
            inv_cost: rng.gen_range(50.0..200.0),
            kind: RenewableKind::Solar,
        }),
    }
    let beta = [0.2, 0.5][rng.gen_range(0..2)];
    let uncertainty = UncertaintyConfig {
        beta_load: beta,
        beta_tpg: beta,
        gamma_load: vec![gamma_for(rng.gen_range(0..=2), hours)],
        gamma_tpg: vec![gamma_for(rng.gen_range(0..=2), hours)],
        delta_t: rng.gen_range(-1..=1),
        ..Default::default()
    };
    let grid = TimeGrid::new(hours, 1, 1).unwrap();
    let ndu = catalog
        .renewable
        .iter()
        .map(|u| (0..hours).map(|_| u.rated_power * rng.gen_range(0.0..1.0)).collect())
        .collect();
    let forecasts = ForecastSet { load, ndu_availability: ndu, tidal_height: tide };
    let econ = EconomicParams { shed_penalty: 1e3, ..Default::default() };
    Instance::new(catalog, grid, econ, forecasts, uncertainty).unwrap()
}

/// Every plan that satisfies the adequacy requirement.
pub fn admissible_plans(inst: &Instance) -> Vec<InvestmentPlan> {
    let n = inst.catalog.len();
    (0u32..1 << n)
        .map(|mask| {
            let flags: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            InvestmentPlan::from_flags(&inst.catalog, &flags).unwrap()
        })
        .filter(|p| !inst.model.adequacy || p.adequacy_capacity(&inst.catalog) + 1e-9 >= inst.peak_load())
        .collect()
}

/// Robust optimum by brute force: every admissible plan against every
/// realization in the uncertainty set.
pub fn exhaustive_robust(inst: &Instance, backend: &dyn MilpBackend) -> (InvestmentPlan, f64) {
    admissible_plans(inst)
        .into_iter()
        .map(|plan| {
            let worst = worst_case(inst, &plan, WorstCaseMethod::Enumerate, backend).unwrap();
            let total = investment_cost(&inst.catalog, &plan, &inst.grid, &inst.econ).unwrap() + worst.cost;
            (plan, total)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
