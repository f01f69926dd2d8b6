//! Reference data: the case-study candidate devices with synthetic forecasts.
//!
//! Device ratings and costs follow the reference case study. The forecast
//! series, basin areas, barrage efficiencies and discount rate are not
//! given there, so the values here are synthetic and chosen to be plausible:
//! a diurnal load between 6 and 12 MW, a semidiurnal tide between 0 and 3 m,
//! and barrages sized to reach rated power close to high tide.

use std::f64::consts::PI;

use crate::error::Result;
use crate::instance::Instance;
use crate::model::{
    Catalog, DesalinationUnit, DispatchableUnit, EconomicParams, ForecastSet, RenewableKind, RenewableUnit,
    StorageUnit, TidalUnit, TimeGrid,
};
use crate::uncertainty::UncertaintyConfig;

pub const FIXTURE_DISCOUNT_RATE: f64 = 0.08;
/// Basin area per MW of rated power, m².
pub const FIXTURE_AREA_PER_MW: f64 = 1e5;
pub const FIXTURE_TIDAL_EFFICIENCY: f64 = 0.85;
pub const FIXTURE_DAY_WEIGHT: f64 = 365.0;
/// Value of lost load, $/MWh.
pub const FIXTURE_SHED_PENALTY: f64 = 1e4;

pub fn reference_catalog() -> Catalog {
    let du = |n: usize, p: f64, c: f64, cc: f64| DispatchableUnit { id: format!("du{n}"), rated_power: p, op_cost: c, inv_cost: cc };
    let tpg = |n: usize, p: f64, cc: f64| TidalUnit {
        id: format!("tpg{n}"),
        rated_power: p,
        inv_cost: cc,
        area: FIXTURE_AREA_PER_MW * p,
        efficiency: FIXTURE_TIDAL_EFFICIENCY,
        op_cost: 0.0,
    };
    let ess = |n: usize, p: f64, e: f64, cp: f64, ce: f64| StorageUnit {
        id: format!("ess{n}"),
        rated_power: p,
        rated_energy: e,
        inv_cost_power: cp,
        inv_cost_energy: ce,
        efficiency: 0.9,
    };
    Catalog {
        dispatchable: vec![
            du(1, 6.0, 140.0, 44_000.0),
            du(2, 5.0, 130.0, 54_000.0),
            du(3, 4.0, 120.0, 64_000.0),
            du(4, 3.0, 110.0, 74_000.0),
            du(5, 2.0, 100.0, 84_000.0),
            du(6, 1.0, 90.0, 94_000.0),
        ],
        renewable: vec![
            RenewableUnit { id: "wt1".into(), rated_power: 4.0, inv_cost: 150_000.0, kind: RenewableKind::Wind },
            RenewableUnit { id: "pv1".into(), rated_power: 2.0, inv_cost: 90_000.0, kind: RenewableKind::Solar },
        ],
        storage: vec![
            ess(1, 1.0, 6.0, 60_000.0, 30_000.0),
            ess(2, 2.0, 6.0, 30_000.0, 30_000.0),
            ess(3, 3.0, 6.0, 20_000.0, 30_000.0),
        ],
        tidal: vec![tpg(1, 5.0, 54_000.0), tpg(2, 4.0, 72_000.0), tpg(3, 3.0, 90_000.0), tpg(4, 2.0, 108_000.0)],
        desalination: DesalinationUnit {
            rated_capacity: 450.0,
            inv_cost: 1.8e6,
            op_cost: 1.0,
            power_per_ton: 0.003,
            daily_demand: 9000.0,
        },
    }
}

/// Load in MW at hour `h` (0-based) of day `d`: peaks at 19:00.
pub fn fixture_load(h: usize, d: usize) -> f64 {
    let day_scale = 1.0 + 0.05 * d as f64;
    day_scale * (9.0 + 3.0 * (2.0 * PI * (h as f64 - 19.0) / 24.0).cos())
}

/// Semidiurnal tide height in m, high water near 07:00 and 19:25.
pub fn fixture_tide(h: usize, d: usize) -> f64 {
    let t = (d * 24 + h) as f64;
    1.5 + 1.5 * (2.0 * PI * (t - 7.0) / 12.42).cos()
}

/// Renewable availability in MW.
pub fn fixture_availability(unit: &RenewableUnit, h: usize, d: usize) -> f64 {
    let h = h as f64;
    let shape = match unit.kind {
        RenewableKind::Wind => 0.45 + 0.25 * (2.0 * PI * (h - 3.0 + 5.0 * d as f64) / 24.0).cos(),
        RenewableKind::Solar => 0.8 * (PI * (h - 6.0) / 12.0).sin().max(0.0),
    };
    (unit.rated_power * shape).clamp(0.0, unit.rated_power)
}

pub fn fixture_forecasts(catalog: &Catalog, grid: &TimeGrid) -> ForecastSet {
    let slots: Vec<(usize, usize)> = (0..grid.slots())
        .map(|s| {
            let (_, d, h) = grid.coords(s);
            (h, d)
        })
        .collect();
    ForecastSet {
        load: slots.iter().map(|&(h, d)| fixture_load(h, d)).collect(),
        ndu_availability: catalog
            .renewable
            .iter()
            .map(|u| slots.iter().map(|&(h, d)| fixture_availability(u, h, d)).collect())
            .collect(),
        tidal_height: slots.iter().map(|&(h, d)| fixture_tide(h, d)).collect(),
    }
}

pub fn fixture_economics() -> EconomicParams {
    EconomicParams { discount_rate: FIXTURE_DISCOUNT_RATE, shed_penalty: FIXTURE_SHED_PENALTY, ..Default::default() }
}

/// One representative 24-hour day weighted to a year, one planning year.
pub fn reference_instance(uncertainty: UncertaintyConfig) -> Result<Instance> {
    let catalog = reference_catalog();
    let grid = TimeGrid::new(24, 1, 1)?.with_day_weights(vec![FIXTURE_DAY_WEIGHT])?;
    let forecasts = fixture_forecasts(&catalog, &grid);
    Instance::new(catalog, grid, fixture_economics(), forecasts, uncertainty)
}
