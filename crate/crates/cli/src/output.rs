//! Result files. Field order is fixed and floats are written in shortest
//! round-trip form, so reruns with the same inputs are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use omplan_core::evaluate::{GenerationShares, SweepRow};
use omplan_core::model::{Catalog, CostBreakdown, InvestmentPlan, OperationSchedule, Technology, TimeGrid};
use omplan_core::robust::IterationRecord;
use omplan_core::uncertainty::{Coord, Direction, Realization};
use omplan_core::{Error, Issue, Result};
use serde::{Deserialize, Serialize};

use crate::config::csv_error;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid("json", e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let raw = std::fs::read(path)?;
    serde_json::from_slice(&raw).map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDevice {
    pub id: String,
    pub technology: Technology,
    pub rated_power: f64,
    pub built: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub built: Vec<String>,
    pub devices: Vec<PlanDevice>,
}

impl PlanFile {
    pub fn new(plan: &InvestmentPlan, catalog: &Catalog) -> Self {
        Self {
            built: plan.built_ids(catalog).into_iter().map(String::from).collect(),
            devices: catalog
                .devices()
                .map(|d| PlanDevice {
                    id: catalog.id(d).to_string(),
                    technology: d.tech,
                    rated_power: catalog.rated_power(d),
                    built: plan.is_built(d),
                })
                .collect(),
        }
    }

    pub fn plan(&self, catalog: &Catalog) -> Result<InvestmentPlan> {
        InvestmentPlan::from_ids(catalog, &self.built)
    }
}

pub fn read_plan(path: &Path, catalog: &Catalog) -> Result<InvestmentPlan> {
    read_json::<PlanFile>(path)?.plan(catalog)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostsFile {
    pub investment: f64,
    pub operation: f64,
    pub total: f64,
    pub shed_mw: f64,
    /// Unmet water demand per (year, day), t.
    pub water_shortfall_t: Vec<f64>,
    pub meets_water_demand: bool,
    pub generation_shares: GenerationShares,
}

impl CostsFile {
    pub fn new(costs: CostBreakdown, schedule: &OperationSchedule, grid: &TimeGrid) -> Self {
        Self {
            investment: costs.investment,
            operation: costs.operation,
            total: costs.total,
            shed_mw: schedule.total_shed(),
            water_shortfall_t: schedule.water_shortfall.clone(),
            meets_water_demand: schedule.total_water_shortfall() <= 1e-6,
            generation_shares: omplan_core::evaluate::generation_shares(schedule, grid),
        }
    }
}

fn schedule_header(catalog: &Catalog) -> Vec<String> {
    let mut h: Vec<String> =
        ["year", "day", "hour", "load_mw", "shed_mw", "water_t"].iter().map(|s| s.to_string()).collect();
    h.extend(catalog.dispatchable.iter().map(|u| format!("{}_mw", u.id)));
    h.extend(catalog.renewable.iter().map(|u| format!("{}_mw", u.id)));
    h.extend(catalog.tidal.iter().map(|u| format!("{}_mw", u.id)));
    for u in &catalog.storage {
        h.push(format!("{}_charge_mw", u.id));
        h.push(format!("{}_discharge_mw", u.id));
        h.push(format!("{}_soc_mwh", u.id));
    }
    h
}

/// One row per slot; an empty schedule yields the header alone.
pub fn write_schedule(path: &Path, schedule: &OperationSchedule, catalog: &Catalog, grid: &TimeGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(schedule_header(catalog)).map_err(csv_error)?;
    for slot in 0..schedule.slots() {
        let (y, d, h) = grid.coords(slot);
        let mut row = vec![(y + 1).to_string(), (d + 1).to_string(), (h + 1).to_string()];
        let load = schedule.load.get(slot).copied().unwrap_or(f64::NAN);
        row.extend([load, schedule.shed[slot], schedule.water[slot]].iter().map(f64::to_string));
        for series in schedule.dispatchable.iter().chain(&schedule.renewable).chain(&schedule.tidal) {
            row.push(series[slot].to_string());
        }
        for l in 0..catalog.storage.len() {
            row.push(schedule.ess_charge[l][slot].to_string());
            row.push(schedule.ess_discharge[l][slot].to_string());
            row.push(schedule.soc[l][slot].to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back the hourly part of a schedule written by [`write_schedule`].
/// Costs and water shortfall live in `costs.json` and are left empty.
pub fn read_schedule(path: &Path, catalog: &Catalog) -> Result<OperationSchedule> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if header != schedule_header(catalog) {
        return Err(Error::invalid(path.display().to_string(), "schedule columns do not match the catalog"));
    }
    let per = |n: usize| vec![Vec::new(); n];
    let mut s = OperationSchedule {
        dispatchable: per(catalog.dispatchable.len()),
        renewable: per(catalog.renewable.len()),
        tidal: per(catalog.tidal.len()),
        ess_charge: per(catalog.storage.len()),
        ess_discharge: per(catalog.storage.len()),
        soc: per(catalog.storage.len()),
        ..Default::default()
    };
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let values: Vec<f64> = record
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("{} line {}", path.display(), line + 2), e.to_string()))?;
        let mut it = values.into_iter();
        let mut next = || it.next().unwrap_or(f64::NAN);
        s.load.push(next());
        s.shed.push(next());
        s.water.push(next());
        for series in s.dispatchable.iter_mut().chain(s.renewable.iter_mut()).chain(s.tidal.iter_mut()) {
            series.push(next());
        }
        for l in 0..catalog.storage.len() {
            s.ess_charge[l].push(next());
            s.ess_discharge[l].push(next());
            s.soc[l].push(next());
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub investment: f64,
    pub worst_operation: f64,
    pub pool_size: usize,
    pub master_columns: usize,
    /// Built device ids separated by `;`.
    pub plan: String,
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in trace {
        w.serialize(TraceRow {
            iteration: r.iteration,
            lower_bound: r.lower_bound,
            upper_bound: r.upper_bound,
            gap: r.gap,
            investment: r.investment,
            worst_operation: r.worst_operation,
            pool_size: r.pool_size,
            master_columns: r.master_columns,
            plan: r.plan.join(";"),
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Up,
    Down,
}

/// One deviated coordinate, one-based. `unit` is empty for load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationEntry {
    pub unit: Option<String>,
    pub year: usize,
    pub day: usize,
    pub hour: usize,
    pub direction: Dir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationFile {
    pub deviations: Vec<DeviationEntry>,
    /// Realized load per slot, MW.
    pub load_mw: Vec<f64>,
    /// Realized tidal availability per unit, MW per slot.
    pub tpg_available_mw: BTreeMap<String, Vec<f64>>,
}

impl RealizationFile {
    pub fn new(
        r: &Realization,
        scenario: &omplan_core::model::Scenario,
        catalog: &Catalog,
        grid: &TimeGrid,
    ) -> Self {
        let mut deviations = Vec::new();
        let mut push = |unit: Option<String>, slot: usize, dir: Option<Direction>| {
            if let Some(dir) = dir {
                let (y, d, h) = grid.coords(slot);
                let direction = if dir == Direction::Up { Dir::Up } else { Dir::Down };
                deviations.push(DeviationEntry { unit, year: y + 1, day: d + 1, hour: h + 1, direction });
            }
        };
        for s in 0..grid.slots() {
            push(None, s, r.get(Coord::Load(s)));
        }
        for (k, u) in catalog.tidal.iter().enumerate() {
            for s in 0..grid.slots() {
                push(Some(u.id.clone()), s, r.get(Coord::Tpg(k, s)));
            }
        }
        let tpg_available_mw =
            catalog.tidal.iter().zip(&scenario.tpg_available).map(|(u, v)| (u.id.clone(), v.clone())).collect();
        Self { deviations, load_mw: scenario.load.clone(), tpg_available_mw }
    }

    pub fn realization(&self, catalog: &Catalog, grid: &TimeGrid) -> Result<Realization> {
        let mut r = Realization::nominal(grid, catalog.tidal.len());
        for e in &self.deviations {
            if e.year == 0 || e.year > grid.years || e.day == 0 || e.day > grid.days || e.hour == 0 || e.hour > grid.hours_per_day
            {
                return Err(Error::invalid("realization", format!("({},{},{}) is off the grid", e.year, e.day, e.hour)));
            }
            let slot = grid.slot(e.year - 1, e.day - 1, e.hour - 1);
            let coord = match &e.unit {
                None => Coord::Load(slot),
                Some(id) => match catalog.tidal.iter().position(|u| &u.id == id) {
                    Some(k) => Coord::Tpg(k, slot),
                    None => return Err(Error::invalid("realization", format!("unknown tidal unit `{id}`"))),
                },
            };
            r.set(coord, Some(if e.direction == Dir::Up { Direction::Up } else { Direction::Down }));
        }
        Ok(r)
    }
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of each input file.
    pub inputs: BTreeMap<String, String>,
    /// The effective configuration after command-line overrides.
    pub config: serde_json::Value,
    pub solver: SolverInfo,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

/// Machine-readable failure report.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub issues: Vec<Issue>,
}

impl ErrorReport {
    pub fn new(e: &Error) -> Self {
        let kind = match e {
            Error::Invalid(_) | Error::Shape(_) | Error::Mps { .. } => "invalid_input",
            Error::Infeasible(_) => "infeasible",
            Error::BackendUnavailable(_) => "backend_unavailable",
            Error::Solver { .. } | Error::BigMOverflow { .. } => "solver",
            Error::EnumerationCap { .. } => "enumeration_cap",
            Error::Io(_) => "io",
        };
        let issues = match e {
            Error::Invalid(list) => list.clone(),
            _ => Vec::new(),
        };
        Self { kind, message: e.to_string(), issues }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "invalid_input" => 2,
            "io" => 74,
            _ => 1,
        }
    }
}
