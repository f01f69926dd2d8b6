//! Domain types shared by the planners and the cost arithmetic.
//!
//! Every hourly quantity is stored flat, indexed by a *slot*
//! `(year * days + day) * hours_per_day + hour`; per-device series are
//! `Vec<Vec<f64>>` indexed `[device][slot]`. Indices are zero-based in memory
//! and one-based in the CSV/JSON interfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};

/// The (hour, day, year) planning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub hours_per_day: usize,
    pub days: usize,
    pub years: usize,
    /// Per-day multiplier applied to operation cost. Empty means all ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub day_weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(hours_per_day: usize, days: usize, years: usize) -> Result<Self> {
        let grid = Self { hours_per_day, days, years, day_weights: Vec::new() };
        grid.check()?;
        Ok(grid)
    }

    pub fn with_day_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.day_weights = weights;
        self.check()?;
        Ok(self)
    }

    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.hours_per_day == 0 {
            issues.push(Issue::new("grid.hours_per_day", "must be at least 1"));
        }
        if self.days == 0 {
            issues.push(Issue::new("grid.days", "must be at least 1"));
        }
        if self.years == 0 {
            issues.push(Issue::new("grid.years", "must be at least 1"));
        }
        if !self.day_weights.is_empty() && self.day_weights.len() != self.days {
            issues.push(Issue::new(
                "grid.day_weights",
                format!("expected {} entries, got {}", self.days, self.day_weights.len()),
            ));
        }
        for (d, w) in self.day_weights.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                issues.push(Issue::new(format!("grid.day_weights[{d}]"), "must be finite and >= 0"));
            }
        }
        issues
    }

    fn check(&self) -> Result<()> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }

    pub fn slots(&self) -> usize {
        self.hours_per_day * self.days * self.years
    }

    /// Number of (day, year) pairs.
    pub fn day_count(&self) -> usize {
        self.days * self.years
    }

    pub fn slot(&self, year: usize, day: usize, hour: usize) -> usize {
        (year * self.days + day) * self.hours_per_day + hour
    }

    /// Inverse of [`TimeGrid::slot`]: `(year, day, hour)`.
    pub fn coords(&self, slot: usize) -> (usize, usize, usize) {
        let hour = slot % self.hours_per_day;
        let day_index = slot / self.hours_per_day;
        (day_index / self.days, day_index % self.days, hour)
    }

    /// Index of the (day, year) pair a slot belongs to.
    pub fn day_index(&self, slot: usize) -> usize {
        slot / self.hours_per_day
    }

    pub fn day_weight(&self, day: usize) -> f64 {
        self.day_weights.get(day).copied().unwrap_or(1.0)
    }

    /// Weight of the day that contains `slot`.
    pub fn slot_weight(&self, slot: usize) -> f64 {
        let (_, d, _) = self.coords(slot);
        self.day_weight(d)
    }

    /// Slots belonging to one (day, year) pair, in hour order.
    pub fn day_slots(&self, day_index: usize) -> std::ops::Range<usize> {
        let start = day_index * self.hours_per_day;
        start..start + self.hours_per_day
    }

    pub fn year_slots(&self, year: usize) -> std::ops::Range<usize> {
        let per_year = self.days * self.hours_per_day;
        year * per_year..(year + 1) * per_year
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchableUnit {
    pub id: String,
    /// MW
    pub rated_power: f64,
    /// $/MWh
    pub op_cost: f64,
    /// Annualized, $/MW
    pub inv_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewableKind {
    Wind,
    Solar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableUnit {
    pub id: String,
    pub rated_power: f64,
    pub inv_cost: f64,
    pub kind: RenewableKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    pub id: String,
    /// MW
    pub rated_power: f64,
    /// MWh
    pub rated_energy: f64,
    /// $/MW
    pub inv_cost_power: f64,
    /// $/MWh
    pub inv_cost_energy: f64,
    /// One-way charge and discharge efficiency.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalUnit {
    pub id: String,
    pub rated_power: f64,
    pub inv_cost: f64,
    /// Barrage basin area, m²
    pub area: f64,
    pub efficiency: f64,
    #[serde(default)]
    pub op_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesalinationUnit {
    /// t/h
    pub rated_capacity: f64,
    /// Annualized, $ per year
    pub inv_cost: f64,
    /// $/t
    pub op_cost: f64,
    /// MW per t/h of fresh water
    pub power_per_ton: f64,
    /// t per day
    pub daily_demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Dispatchable,
    Renewable,
    Storage,
    Tidal,
}

impl Technology {
    pub const ALL: [Technology; 4] =
        [Technology::Dispatchable, Technology::Renewable, Technology::Storage, Technology::Tidal];

    pub fn label(self) -> &'static str {
        match self {
            Technology::Dispatchable => "du",
            Technology::Renewable => "ndu",
            Technology::Storage => "ess",
            Technology::Tidal => "tpg",
        }
    }
}

/// A candidate device addressed by technology and position within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeviceRef {
    pub tech: Technology,
    pub index: usize,
}

/// Candidate devices plus the compulsory desalination unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    #[serde(default)]
    pub dispatchable: Vec<DispatchableUnit>,
    #[serde(default)]
    pub renewable: Vec<RenewableUnit>,
    #[serde(default)]
    pub storage: Vec<StorageUnit>,
    #[serde(default)]
    pub tidal: Vec<TidalUnit>,
    pub desalination: DesalinationUnit,
}

fn positive(issues: &mut Vec<Issue>, field: String, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        issues.push(Issue::new(field, format!("must be > 0 (got {value})")));
    }
}

fn non_negative(issues: &mut Vec<Issue>, field: String, value: f64) {
    if !(value.is_finite() && value >= 0.0) {
        issues.push(Issue::new(field, format!("must be >= 0 (got {value})")));
    }
}

fn fraction(issues: &mut Vec<Issue>, field: String, value: f64) {
    if !(value > 0.0 && value <= 1.0) {
        issues.push(Issue::new(field, format!("must lie in (0, 1] (got {value})")));
    }
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.dispatchable.len() + self.renewable.len() + self.storage.len() + self.tidal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, tech: Technology) -> usize {
        match tech {
            Technology::Dispatchable => self.dispatchable.len(),
            Technology::Renewable => self.renewable.len(),
            Technology::Storage => self.storage.len(),
            Technology::Tidal => self.tidal.len(),
        }
    }

    /// Every candidate in canonical order: DU, NDU, ESS, TPG.
    pub fn devices(&self) -> impl Iterator<Item = DeviceRef> + '_ {
        Technology::ALL
            .into_iter()
            .flat_map(move |tech| (0..self.count(tech)).map(move |index| DeviceRef { tech, index }))
    }

    pub fn id(&self, device: DeviceRef) -> &str {
        match device.tech {
            Technology::Dispatchable => &self.dispatchable[device.index].id,
            Technology::Renewable => &self.renewable[device.index].id,
            Technology::Storage => &self.storage[device.index].id,
            Technology::Tidal => &self.tidal[device.index].id,
        }
    }

    pub fn rated_power(&self, device: DeviceRef) -> f64 {
        match device.tech {
            Technology::Dispatchable => self.dispatchable[device.index].rated_power,
            Technology::Renewable => self.renewable[device.index].rated_power,
            Technology::Storage => self.storage[device.index].rated_power,
            Technology::Tidal => self.tidal[device.index].rated_power,
        }
    }

    /// Annualized investment cost of one device, before discounting.
    pub fn annual_investment(&self, device: DeviceRef) -> f64 {
        match device.tech {
            Technology::Dispatchable => {
                let u = &self.dispatchable[device.index];
                u.inv_cost * u.rated_power
            }
            Technology::Renewable => {
                let u = &self.renewable[device.index];
                u.inv_cost * u.rated_power
            }
            Technology::Storage => {
                let u = &self.storage[device.index];
                u.inv_cost_power * u.rated_power + u.inv_cost_energy * u.rated_energy
            }
            Technology::Tidal => {
                let u = &self.tidal[device.index];
                u.inv_cost * u.rated_power
            }
        }
    }

    /// Largest levelized operation cost among devices that carry one.
    pub fn max_op_cost(&self) -> f64 {
        self.dispatchable
            .iter()
            .map(|u| u.op_cost)
            .chain(self.tidal.iter().map(|u| u.op_cost))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        for (i, u) in self.dispatchable.iter().enumerate() {
            let p = format!("catalog.dispatchable[{i}]");
            positive(&mut issues, format!("{p}.rated_power"), u.rated_power);
            positive(&mut issues, format!("{p}.op_cost"), u.op_cost);
            positive(&mut issues, format!("{p}.inv_cost"), u.inv_cost);
        }
        for (j, u) in self.renewable.iter().enumerate() {
            let p = format!("catalog.renewable[{j}]");
            positive(&mut issues, format!("{p}.rated_power"), u.rated_power);
            positive(&mut issues, format!("{p}.inv_cost"), u.inv_cost);
        }
        for (l, u) in self.storage.iter().enumerate() {
            let p = format!("catalog.storage[{l}]");
            positive(&mut issues, format!("{p}.rated_power"), u.rated_power);
            positive(&mut issues, format!("{p}.rated_energy"), u.rated_energy);
            non_negative(&mut issues, format!("{p}.inv_cost_power"), u.inv_cost_power);
            non_negative(&mut issues, format!("{p}.inv_cost_energy"), u.inv_cost_energy);
            fraction(&mut issues, format!("{p}.efficiency"), u.efficiency);
        }
        for (k, u) in self.tidal.iter().enumerate() {
            let p = format!("catalog.tidal[{k}]");
            positive(&mut issues, format!("{p}.rated_power"), u.rated_power);
            positive(&mut issues, format!("{p}.inv_cost"), u.inv_cost);
            positive(&mut issues, format!("{p}.area"), u.area);
            fraction(&mut issues, format!("{p}.efficiency"), u.efficiency);
            non_negative(&mut issues, format!("{p}.op_cost"), u.op_cost);
        }
        let f = &self.desalination;
        positive(&mut issues, "catalog.desalination.rated_capacity".into(), f.rated_capacity);
        non_negative(&mut issues, "catalog.desalination.inv_cost".into(), f.inv_cost);
        non_negative(&mut issues, "catalog.desalination.op_cost".into(), f.op_cost);
        positive(&mut issues, "catalog.desalination.power_per_ton".into(), f.power_per_ton);
        non_negative(&mut issues, "catalog.desalination.daily_demand".into(), f.daily_demand);

        let mut seen = std::collections::BTreeSet::new();
        for device in self.devices() {
            let id = self.id(device);
            if id.is_empty() || id.contains(char::is_whitespace) || id.contains(',') {
                issues.push(Issue::new(
                    format!("catalog.{}.id", device.tech.label()),
                    format!("`{id}` must be non-empty without whitespace or commas"),
                ));
            }
            if !seen.insert(id) {
                issues.push(Issue::new("catalog", format!("duplicate device id `{id}`")));
            }
        }
        issues
    }

    /// Checks that need the grid: water demand must be reachable within a day.
    pub fn validate_against(&self, grid: &TimeGrid) -> Vec<Issue> {
        let f = &self.desalination;
        let daily_max = grid.hours_per_day as f64 * f.rated_capacity;
        if daily_max < f.daily_demand {
            vec![Issue::new(
                "catalog.desalination.daily_demand",
                format!(
                    "{} t/day exceeds what {} h at {} t/h can produce",
                    f.daily_demand, grid.hours_per_day, f.rated_capacity
                ),
            )]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomicParams {
    pub discount_rate: f64,
    /// Value of lost load, $/MWh.
    pub shed_penalty: f64,
    /// kg/m³
    #[serde(default = "default_sea_density")]
    pub sea_density: f64,
    /// m/s²
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_sea_density() -> f64 {
    1025.0
}

fn default_gravity() -> f64 {
    9.81
}

pub const DEFAULT_SHED_PENALTY: f64 = 1e6;

impl Default for EconomicParams {
    fn default() -> Self {
        Self {
            discount_rate: 0.0,
            shed_penalty: DEFAULT_SHED_PENALTY,
            sea_density: default_sea_density(),
            gravity: default_gravity(),
        }
    }
}

impl EconomicParams {
    pub fn validate(&self, catalog: &Catalog) -> Vec<Issue> {
        let mut issues = Vec::new();
        non_negative(&mut issues, "economics.discount_rate".into(), self.discount_rate);
        positive(&mut issues, "economics.sea_density".into(), self.sea_density);
        positive(&mut issues, "economics.gravity".into(), self.gravity);
        let highest = catalog.max_op_cost().max(
            catalog.desalination.op_cost / catalog.desalination.power_per_ton.max(f64::MIN_POSITIVE),
        );
        if !(self.shed_penalty.is_finite() && self.shed_penalty > catalog.max_op_cost()) {
            issues.push(Issue::new(
                "economics.shed_penalty",
                format!("must exceed every levelized operation cost (max {})", catalog.max_op_cost()),
            ));
        } else if self.shed_penalty <= highest {
            log::warn!(
                "shed penalty {} does not dominate the desalination energy cost {highest}",
                self.shed_penalty
            );
        }
        issues
    }

    /// Penalty per tonne of unmet daily water demand. Priced so that a tonne
    /// of shortfall costs as much as shedding its production power all day.
    pub fn water_shortfall_penalty(&self, desal: &DesalinationUnit, grid: &TimeGrid) -> f64 {
        self.shed_penalty * desal.power_per_ton * grid.hours_per_day as f64
    }
}

/// Hourly forecasts over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    /// MW per slot
    pub load: Vec<f64>,
    /// MW per (NDU, slot), already capped at rated power
    pub ndu_availability: Vec<Vec<f64>>,
    /// m per slot
    pub tidal_height: Vec<f64>,
}

impl ForecastSet {
    pub fn validate(&self, grid: &TimeGrid, catalog: &Catalog) -> Vec<Issue> {
        let mut issues = Vec::new();
        let n = grid.slots();
        let mut series = |name: String, values: &[f64], cap: Option<f64>| {
            if values.len() != n {
                issues.push(Issue::new(name.clone(), format!("expected {n} values, got {}", values.len())));
                return;
            }
            for (slot, v) in values.iter().enumerate() {
                let (y, d, h) = grid.coords(slot);
                if !(v.is_finite() && *v >= 0.0) {
                    issues.push(Issue::new(
                        format!("{name}(y={},d={},h={})", y + 1, d + 1, h + 1),
                        format!("must be finite and >= 0 (got {v})"),
                    ));
                } else if let Some(cap) = cap {
                    if *v > cap * (1.0 + 1e-9) {
                        issues.push(Issue::new(
                            format!("{name}(y={},d={},h={})", y + 1, d + 1, h + 1),
                            format!("{v} MW exceeds rated power {cap} MW"),
                        ));
                    }
                }
            }
        };
        series("forecast.load_mw".into(), &self.load, None);
        series("forecast.tidal_height_m".into(), &self.tidal_height, None);
        if self.ndu_availability.len() != catalog.renewable.len() {
            issues.push(Issue::new(
                "forecast.ndu_availability",
                format!("expected {} series, got {}", catalog.renewable.len(), self.ndu_availability.len()),
            ));
        } else {
            for (unit, values) in catalog.renewable.iter().zip(&self.ndu_availability) {
                series(format!("forecast.{}", unit.id), values, Some(unit.rated_power));
            }
        }
        issues
    }

    pub fn peak_load(&self) -> f64 {
        self.load.iter().copied().fold(0.0, f64::max)
    }
}

/// Concrete realized data the recourse operates against: load, NDU
/// availability and the TPG upper bound, all per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub load: Vec<f64>,
    pub ndu_available: Vec<Vec<f64>>,
    pub tpg_available: Vec<Vec<f64>>,
}

/// Binary build decisions, aligned with the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvestmentPlan {
    pub dispatchable: Vec<bool>,
    pub renewable: Vec<bool>,
    pub storage: Vec<bool>,
    pub tidal: Vec<bool>,
}

impl InvestmentPlan {
    pub fn none(catalog: &Catalog) -> Self {
        Self::uniform(catalog, false)
    }

    pub fn all(catalog: &Catalog) -> Self {
        Self::uniform(catalog, true)
    }

    fn uniform(catalog: &Catalog, value: bool) -> Self {
        Self {
            dispatchable: vec![value; catalog.dispatchable.len()],
            renewable: vec![value; catalog.renewable.len()],
            storage: vec![value; catalog.storage.len()],
            tidal: vec![value; catalog.tidal.len()],
        }
    }

    /// Build a plan from flags in canonical device order.
    pub fn from_flags(catalog: &Catalog, flags: &[bool]) -> Result<Self> {
        if flags.len() != catalog.len() {
            return Err(Error::Shape(format!(
                "plan has {} flags, catalog has {} devices",
                flags.len(),
                catalog.len()
            )));
        }
        let mut rest = flags;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec()
        };
        Ok(Self {
            dispatchable: take(catalog.dispatchable.len()),
            renewable: take(catalog.renewable.len()),
            storage: take(catalog.storage.len()),
            tidal: take(catalog.tidal.len()),
        })
    }

    /// Build a plan from the ids of devices to build.
    pub fn from_ids<S: AsRef<str>>(catalog: &Catalog, ids: &[S]) -> Result<Self> {
        let mut plan = Self::none(catalog);
        for id in ids {
            let device = catalog
                .devices()
                .find(|d| catalog.id(*d) == id.as_ref())
                .ok_or_else(|| Error::invalid("plan", format!("unknown device id `{}`", id.as_ref())))?;
            plan.set(device, true);
        }
        Ok(plan)
    }

    pub fn flags(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(&self.dispatchable);
        out.extend(&self.renewable);
        out.extend(&self.storage);
        out.extend(&self.tidal);
        out
    }

    pub fn len(&self) -> usize {
        self.dispatchable.len() + self.renewable.len() + self.storage.len() + self.tidal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_built(&self, device: DeviceRef) -> bool {
        match device.tech {
            Technology::Dispatchable => self.dispatchable[device.index],
            Technology::Renewable => self.renewable[device.index],
            Technology::Storage => self.storage[device.index],
            Technology::Tidal => self.tidal[device.index],
        }
    }

    pub fn set(&mut self, device: DeviceRef, built: bool) {
        match device.tech {
            Technology::Dispatchable => self.dispatchable[device.index] = built,
            Technology::Renewable => self.renewable[device.index] = built,
            Technology::Storage => self.storage[device.index] = built,
            Technology::Tidal => self.tidal[device.index] = built,
        }
    }

    pub fn check(&self, catalog: &Catalog) -> Result<()> {
        let ok = self.dispatchable.len() == catalog.dispatchable.len()
            && self.renewable.len() == catalog.renewable.len()
            && self.storage.len() == catalog.storage.len()
            && self.tidal.len() == catalog.tidal.len();
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("investment plan does not match the catalog".into()))
        }
    }

    pub fn built_ids<'a>(&self, catalog: &'a Catalog) -> Vec<&'a str> {
        catalog.devices().filter(|d| self.is_built(*d)).map(|d| catalog.id(d)).collect()
    }

    /// Installed rated power (MW) of one technology.
    pub fn installed_capacity(&self, catalog: &Catalog, tech: Technology) -> f64 {
        catalog
            .devices()
            .filter(|d| d.tech == tech && self.is_built(*d))
            .map(|d| catalog.rated_power(d))
            .sum()
    }

    /// Generation capacity counted by the adequacy constraint (DU + NDU + TPG).
    pub fn adequacy_capacity(&self, catalog: &Catalog) -> f64 {
        [Technology::Dispatchable, Technology::Renewable, Technology::Tidal]
            .into_iter()
            .map(|t| self.installed_capacity(catalog, t))
            .sum()
    }
}

/// Hourly dispatch for one plan and one realization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperationSchedule {
    pub dispatchable: Vec<Vec<f64>>,
    pub renewable: Vec<Vec<f64>>,
    pub tidal: Vec<Vec<f64>>,
    pub ess_charge: Vec<Vec<f64>>,
    pub ess_discharge: Vec<Vec<f64>>,
    /// State of charge at the start of each hour, MWh.
    pub soc: Vec<Vec<f64>>,
    /// t per slot
    pub water: Vec<f64>,
    /// MW per slot
    pub shed: Vec<f64>,
    /// Unmet daily water demand, t per (day, year). Zero in any acceptable plan.
    pub water_shortfall: Vec<f64>,
    /// Realized load the schedule was dispatched against, MW per slot.
    pub load: Vec<f64>,
    pub cost_inv: f64,
    pub cost_ope: f64,
}

impl OperationSchedule {
    pub fn slots(&self) -> usize {
        self.shed.len()
    }

    pub fn total_shed(&self) -> f64 {
        self.shed.iter().sum()
    }

    pub fn total_water_shortfall(&self) -> f64 {
        self.water_shortfall.iter().sum()
    }

    fn check_shape(&self, catalog: &Catalog, grid: &TimeGrid) -> Result<()> {
        let n = grid.slots();
        let per_device = |name: &str, series: &[Vec<f64>], count: usize| -> Result<()> {
            if series.len() != count || series.iter().any(|s| s.len() != n) {
                return Err(Error::Shape(format!("schedule.{name} does not match {count} devices × {n} slots")));
            }
            Ok(())
        };
        per_device("dispatchable", &self.dispatchable, catalog.dispatchable.len())?;
        per_device("renewable", &self.renewable, catalog.renewable.len())?;
        per_device("tidal", &self.tidal, catalog.tidal.len())?;
        per_device("ess_charge", &self.ess_charge, catalog.storage.len())?;
        per_device("ess_discharge", &self.ess_discharge, catalog.storage.len())?;
        per_device("soc", &self.soc, catalog.storage.len())?;
        if self.water.len() != n || self.shed.len() != n {
            return Err(Error::Shape(format!("schedule water/shed must have {n} slots")));
        }
        if self.water_shortfall.len() != grid.day_count() {
            return Err(Error::Shape(format!(
                "schedule.water_shortfall must have {} entries",
                grid.day_count()
            )));
        }
        Ok(())
    }
}

/// Investment, operation and total cost of one solution, in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub investment: f64,
    pub operation: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(investment: f64, operation: f64) -> Self {
        Self { investment, operation, total: investment + operation }
    }
}

/// Present-worth factor of year `year` (one-based).
pub fn present_worth_factor(discount_rate: f64, year: usize) -> Result<f64> {
    if !(discount_rate.is_finite() && discount_rate >= 0.0) {
        return Err(Error::invalid("discount_rate", format!("must be >= 0 (got {discount_rate})")));
    }
    if year < 1 {
        return Err(Error::invalid("year", "years are counted from 1"));
    }
    Ok((1.0 + discount_rate).powi(-(year as i32 - 1)))
}

/// Σ_y κ_y over the planning horizon.
pub fn discounted_years(grid: &TimeGrid, econ: &EconomicParams) -> Result<f64> {
    (1..=grid.years).map(|y| present_worth_factor(econ.discount_rate, y)).sum()
}

/// Discounted investment coefficient of every device in canonical order, plus
/// the plan-independent desalination term.
pub fn investment_coefficients(
    catalog: &Catalog,
    grid: &TimeGrid,
    econ: &EconomicParams,
) -> Result<(Vec<f64>, f64)> {
    let kappa = discounted_years(grid, econ)?;
    let per_device = catalog.devices().map(|d| kappa * catalog.annual_investment(d)).collect();
    Ok((per_device, kappa * catalog.desalination.inv_cost))
}

pub fn investment_cost(
    catalog: &Catalog,
    plan: &InvestmentPlan,
    grid: &TimeGrid,
    econ: &EconomicParams,
) -> Result<f64> {
    plan.check(catalog)?;
    let (coefficients, constant) = investment_coefficients(catalog, grid, econ)?;
    let variable: f64 =
        coefficients.iter().zip(plan.flags()).filter(|(_, built)| *built).map(|(c, _)| c).sum();
    Ok(variable + constant)
}

/// Day-weighted operation cost of a schedule, including the water-shortfall
/// penalty (zero for any schedule that meets the daily water demand).
pub fn operation_cost(
    schedule: &OperationSchedule,
    catalog: &Catalog,
    econ: &EconomicParams,
    grid: &TimeGrid,
) -> Result<f64> {
    schedule.check_shape(catalog, grid)?;
    let desal = &catalog.desalination;
    let mut total = 0.0;
    for slot in 0..grid.slots() {
        let mut hour = desal.op_cost * schedule.water[slot] + econ.shed_penalty * schedule.shed[slot];
        for (u, p) in catalog.dispatchable.iter().zip(&schedule.dispatchable) {
            hour += u.op_cost * p[slot];
        }
        for (u, p) in catalog.tidal.iter().zip(&schedule.tidal) {
            hour += u.op_cost * p[slot];
        }
        total += grid.slot_weight(slot) * hour;
    }
    let penalty = econ.water_shortfall_penalty(desal, grid);
    for (day_index, shortfall) in schedule.water_shortfall.iter().enumerate() {
        let d = day_index % grid.days;
        total += grid.day_weight(d) * penalty * shortfall;
    }
    Ok(total)
}

/// One violated constraint found by [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: &'static str,
    pub index: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cites(&self, constraint: &str) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for v in &self.violations {
            writeln!(f, "{} at {}: residual {:e}", v.constraint, v.index, v.residual)?;
        }
        Ok(())
    }
}

struct Auditor<'a> {
    grid: &'a TimeGrid,
    tol: f64,
    report: VerifyReport,
}

impl Auditor<'_> {
    fn at(&self, slot: usize) -> String {
        let (y, d, h) = self.grid.coords(slot);
        format!("y={},d={},h={}", y + 1, d + 1, h + 1)
    }

    fn flag(&mut self, constraint: &'static str, index: String, residual: f64, scale: f64) {
        if residual > self.tol * scale.abs().max(1.0) || residual.is_nan() {
            self.report.violations.push(Violation { constraint, index, residual });
        }
    }

    fn bounded(&mut self, constraint: &'static str, index: String, value: f64, upper: f64) {
        self.flag(constraint, index.clone(), -value, 0.0);
        self.flag(constraint, index, value - upper, upper);
    }
}

/// Audit a schedule against every operational constraint for its plan and
/// realized scenario. Residuals are compared to `tol · max(1, |bound|)`.
pub fn verify_schedule(
    plan: &InvestmentPlan,
    schedule: &OperationSchedule,
    scenario: &Scenario,
    catalog: &Catalog,
    grid: &TimeGrid,
    tol: f64,
) -> VerifyReport {
    let mut audit = Auditor { grid, tol, report: VerifyReport::default() };
    if let Err(e) = plan.check(catalog).and_then(|_| schedule.check_shape(catalog, grid)) {
        audit.report.violations.push(Violation { constraint: "shape", index: e.to_string(), residual: f64::NAN });
        return audit.report;
    }
    let x = |built: bool| if built { 1.0 } else { 0.0 };
    let desal = &catalog.desalination;

    for slot in 0..grid.slots() {
        let at = audit.at(slot);
        let mut supply = 0.0;
        for (i, u) in catalog.dispatchable.iter().enumerate() {
            let p = schedule.dispatchable[i][slot];
            audit.bounded("dispatchable_limit", format!("{},{at}", u.id), p, u.rated_power * x(plan.dispatchable[i]));
            supply += p;
        }
        for (j, u) in catalog.renewable.iter().enumerate() {
            let p = schedule.renewable[j][slot];
            let cap = scenario.ndu_available[j][slot] * x(plan.renewable[j]);
            audit.bounded("renewable_limit", format!("{},{at}", u.id), p, cap);
            supply += p;
        }
        for (k, u) in catalog.tidal.iter().enumerate() {
            let p = schedule.tidal[k][slot];
            let cap = scenario.tpg_available[k][slot] * x(plan.tidal[k]);
            audit.bounded("tidal_limit", format!("{},{at}", u.id), p, cap);
            supply += p;
        }
        for (l, u) in catalog.storage.iter().enumerate() {
            let built = x(plan.storage[l]);
            let ch = schedule.ess_charge[l][slot];
            let dch = schedule.ess_discharge[l][slot];
            audit.bounded("charge_limit", format!("{},{at}", u.id), ch, u.rated_power * built);
            audit.bounded("discharge_limit", format!("{},{at}", u.id), dch, u.rated_power * built);
            audit.bounded("soc_limit", format!("{},{at}", u.id), schedule.soc[l][slot], u.rated_energy * built);
            supply += dch - ch;
        }
        let load = scenario.load[slot];
        let shed = schedule.shed[slot];
        let water = schedule.water[slot];
        audit.bounded("shed_limit", at.clone(), shed, load);
        audit.bounded("water_limit", at.clone(), water, desal.rated_capacity);
        let imbalance = supply - load - desal.power_per_ton * water + shed;
        audit.flag("power_balance", at, imbalance.abs(), load);
    }

    for (l, u) in catalog.storage.iter().enumerate() {
        for day_index in 0..grid.day_count() {
            let slots = grid.day_slots(day_index);
            let first = slots.start;
            for slot in slots.clone() {
                let next = if slot + 1 == slots.end { first } else { slot + 1 };
                let expected = schedule.soc[l][slot] + u.efficiency * schedule.ess_charge[l][slot]
                    - schedule.ess_discharge[l][slot] / u.efficiency;
                let residual = (schedule.soc[l][next] - expected).abs();
                let name = if next == first { "cyclic_soc" } else { "soc_dynamics" };
                let at = audit.at(slot);
                audit.flag(name, format!("{},{at}", u.id), residual, u.rated_energy);
            }
        }
    }

    for day_index in 0..grid.day_count() {
        let produced: f64 = grid.day_slots(day_index).map(|s| schedule.water[s]).sum();
        let shortfall = schedule.water_shortfall[day_index];
        let (y, d, _) = grid.coords(grid.day_slots(day_index).start);
        let at = format!("y={},d={}", y + 1, d + 1);
        audit.flag("daily_water", at.clone(), desal.daily_demand - produced - shortfall, desal.daily_demand);
        audit.flag("water_shortfall", at, shortfall, desal.daily_demand);
    }
    audit.report
}
