//! Budget uncertainty sets on load and tidal generation.
//!
//! Each uncertain coordinate (a load slot, or a tidal unit at a slot) may move
//! to `nominal·(1 ± β)`. Within a budget group at most `Γ` coordinates move.
//! Load has one group per year; tidal generation has one group per year that
//! is shared by all units, or one per (year, unit) under [`TpgBudget::PerUnit`].

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Issue, Result};
use crate::model::{Scenario, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TpgBudget {
    #[default]
    Shared,
    PerUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    #[serde(default)]
    pub beta_load: f64,
    #[serde(default)]
    pub beta_tpg: f64,
    /// One value per year, or a single value used for every year.
    #[serde(default, deserialize_with = "per_year")]
    pub gamma_load: Vec<f64>,
    #[serde(default, deserialize_with = "per_year")]
    pub gamma_tpg: Vec<f64>,
    #[serde(default)]
    pub delta_t: i32,
    #[serde(default)]
    pub tpg_budget: TpgBudget,
}

fn per_year<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self::deterministic()
    }
}

impl UncertaintyConfig {
    pub fn deterministic() -> Self {
        Self {
            beta_load: 0.0,
            beta_tpg: 0.0,
            gamma_load: vec![0.0],
            gamma_tpg: vec![0.0],
            delta_t: 0,
            tpg_budget: TpgBudget::Shared,
        }
    }

    /// Same β and γ for load and tidal generation in every year.
    pub fn symmetric(beta: f64, gamma: f64) -> Self {
        Self { beta_load: beta, beta_tpg: beta, gamma_load: vec![gamma], gamma_tpg: vec![gamma], ..Self::deterministic() }
    }

    fn gamma(values: &[f64], year: usize) -> f64 {
        match values {
            [] => 0.0,
            [one] => *one,
            many => many[year],
        }
    }

    pub fn gamma_load(&self, year: usize) -> f64 {
        Self::gamma(&self.gamma_load, year)
    }

    pub fn gamma_tpg(&self, year: usize) -> f64 {
        Self::gamma(&self.gamma_tpg, year)
    }

    pub fn validate(&self, grid: &TimeGrid) -> Vec<Issue> {
        let mut issues = Vec::new();
        for (name, beta) in [("uncertainty.beta_load", self.beta_load), ("uncertainty.beta_tpg", self.beta_tpg)] {
            if !(0.0..=1.0).contains(&beta) {
                issues.push(Issue::new(name, format!("must lie in [0, 1] (got {beta})")));
            }
        }
        for (name, gammas) in [("uncertainty.gamma_load", &self.gamma_load), ("uncertainty.gamma_tpg", &self.gamma_tpg)] {
            if gammas.len() > 1 && gammas.len() != grid.years {
                issues.push(Issue::new(name, format!("expected 1 or {} values, got {}", grid.years, gammas.len())));
            }
            for (y, g) in gammas.iter().enumerate() {
                if !(0.0..=1.0).contains(g) {
                    issues.push(Issue::new(format!("{name}[{y}]"), format!("must lie in [0, 1] (got {g})")));
                }
            }
        }
        if self.delta_t.abs() > crate::tidal::MAX_DELAY {
            issues.push(Issue::new(
                "uncertainty.delta_t",
                format!("must lie in [-{0}, {0}] (got {1})", crate::tidal::MAX_DELAY, self.delta_t),
            ));
        }
        issues
    }

    pub fn check(&self, grid: &TimeGrid) -> Result<()> {
        let issues = self.validate(grid);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }
}

/// Integer deviation budget `floor(γ·D·H)`.
pub fn budget(gamma: f64, grid: &TimeGrid) -> Result<usize> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("must lie in [0, 1] (got {gamma})")));
    }
    // The epsilon keeps products like 0.29·100 from flooring to 28.
    Ok((gamma * (grid.days * grid.hours_per_day) as f64 + 1e-9).floor() as usize)
}

/// One uncertain quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    /// Load at a slot.
    Load(usize),
    /// Tidal unit `k` at a slot.
    Tpg(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
}

/// Coordinates that share one deviation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetGroup {
    pub label: String,
    pub coords: Vec<Coord>,
    pub budget: usize,
}

/// Which coordinates may deviate. Coordinates left out stay at nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    pub load: bool,
    /// One flag per tidal unit.
    pub tpg_units: Vec<bool>,
}

impl Restriction {
    pub fn all(tpg_units: usize) -> Self {
        Self { load: true, tpg_units: vec![true; tpg_units] }
    }

    pub fn load_only(tpg_units: usize) -> Self {
        Self { load: true, tpg_units: vec![false; tpg_units] }
    }
}

/// Budget groups over the grid for the given restriction. Groups with no
/// coordinates or a zero budget are omitted.
pub fn budget_groups(grid: &TimeGrid, config: &UncertaintyConfig, restriction: &Restriction) -> Result<Vec<BudgetGroup>> {
    config.check(grid)?;
    let mut groups = Vec::new();
    for y in 0..grid.years {
        let slots = grid.year_slots(y);
        let load_budget = budget(config.gamma_load(y), grid)?;
        if restriction.load && load_budget > 0 {
            groups.push(BudgetGroup {
                label: format!("load,y={}", y + 1),
                coords: slots.clone().map(Coord::Load).collect(),
                budget: load_budget,
            });
        }
        let tpg_budget = budget(config.gamma_tpg(y), grid)?;
        if tpg_budget == 0 {
            continue;
        }
        let units: Vec<usize> =
            restriction.tpg_units.iter().enumerate().filter(|(_, on)| **on).map(|(k, _)| k).collect();
        match config.tpg_budget {
            TpgBudget::Shared if !units.is_empty() => groups.push(BudgetGroup {
                label: format!("tpg,y={}", y + 1),
                coords: units.iter().flat_map(|&k| slots.clone().map(move |s| Coord::Tpg(k, s))).collect(),
                budget: tpg_budget,
            }),
            TpgBudget::Shared => {}
            TpgBudget::PerUnit => {
                for &k in &units {
                    groups.push(BudgetGroup {
                        label: format!("tpg{},y={}", k + 1, y + 1),
                        coords: slots.clone().map(|s| Coord::Tpg(k, s)).collect(),
                        budget: tpg_budget,
                    });
                }
            }
        }
    }
    Ok(groups)
}

/// Deviation flags for every coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    pub load_up: Vec<bool>,
    pub load_down: Vec<bool>,
    /// `[unit][slot]`
    pub tpg_up: Vec<Vec<bool>>,
    pub tpg_down: Vec<Vec<bool>>,
}

impl Realization {
    pub fn nominal(grid: &TimeGrid, tpg_units: usize) -> Self {
        let n = grid.slots();
        Self {
            load_up: vec![false; n],
            load_down: vec![false; n],
            tpg_up: vec![vec![false; n]; tpg_units],
            tpg_down: vec![vec![false; n]; tpg_units],
        }
    }

    pub fn set(&mut self, coord: Coord, direction: Option<Direction>) {
        let (up, down) = match coord {
            Coord::Load(s) => (&mut self.load_up[s], &mut self.load_down[s]),
            Coord::Tpg(k, s) => (&mut self.tpg_up[k][s], &mut self.tpg_down[k][s]),
        };
        *up = direction == Some(Direction::Up);
        *down = direction == Some(Direction::Down);
    }

    pub fn get(&self, coord: Coord) -> Option<Direction> {
        let (up, down) = match coord {
            Coord::Load(s) => (self.load_up[s], self.load_down[s]),
            Coord::Tpg(k, s) => (self.tpg_up[k][s], self.tpg_down[k][s]),
        };
        match (up, down) {
            (true, false) => Some(Direction::Up),
            (false, true) => Some(Direction::Down),
            _ => None,
        }
    }

    /// Number of flagged coordinates.
    pub fn deviations(&self) -> usize {
        let count = |v: &[bool]| v.iter().filter(|b| **b).count();
        count(&self.load_up)
            + count(&self.load_down)
            + self.tpg_up.iter().map(|v| count(v)).sum::<usize>()
            + self.tpg_down.iter().map(|v| count(v)).sum::<usize>()
    }

    /// Check shapes, exclusivity and per-year budgets.
    pub fn validate(&self, grid: &TimeGrid, config: &UncertaintyConfig) -> Result<()> {
        let n = grid.slots();
        let k = self.tpg_up.len();
        if self.load_up.len() != n
            || self.load_down.len() != n
            || self.tpg_down.len() != k
            || self.tpg_up.iter().chain(&self.tpg_down).any(|v| v.len() != n)
        {
            return Err(Error::Shape("realization does not match the grid".into()));
        }
        let mut issues = Vec::new();
        for s in 0..n {
            if self.load_up[s] && self.load_down[s] {
                issues.push(Issue::new(format!("realization.load[{s}]"), "up and down both set"));
            }
            for unit in 0..k {
                if self.tpg_up[unit][s] && self.tpg_down[unit][s] {
                    issues.push(Issue::new(format!("realization.tpg[{unit}][{s}]"), "up and down both set"));
                }
            }
        }
        for group in budget_groups(grid, config, &Restriction::all(k))? {
            let used = group.coords.iter().filter(|c| self.get(**c).is_some()).count();
            if used > group.budget {
                issues.push(Issue::new(
                    format!("realization.{}", group.label),
                    format!("{used} deviations exceed the budget of {}", group.budget),
                ));
            }
        }
        // Coordinates outside every group must stay nominal.
        for y in 0..grid.years {
            for s in grid.year_slots(y) {
                if budget(config.gamma_load(y), grid)? == 0 && self.get(Coord::Load(s)).is_some() {
                    issues.push(Issue::new(format!("realization.load[{s}]"), "deviates with a zero budget"));
                }
                for unit in 0..k {
                    if budget(config.gamma_tpg(y), grid)? == 0 && self.get(Coord::Tpg(unit, s)).is_some() {
                        issues.push(Issue::new(format!("realization.tpg[{unit}][{s}]"), "deviates with a zero budget"));
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }
}

fn factor(beta: f64, up: bool, down: bool) -> f64 {
    1.0 - beta * f64::from(u8::from(down)) + beta * f64::from(u8::from(up))
}

/// Realized load `L̃·(1 − β·down + β·up)`.
pub fn realize_load(forecast: &[f64], config: &UncertaintyConfig, realization: &Realization) -> Result<Vec<f64>> {
    if forecast.len() != realization.load_up.len() {
        return Err(Error::Shape("load forecast and realization differ in length".into()));
    }
    if realization.load_up.iter().zip(&realization.load_down).any(|(u, d)| *u && *d) {
        return Err(Error::invalid("realization.load", "up and down both set"));
    }
    Ok(forecast
        .iter()
        .enumerate()
        .map(|(s, l)| l * factor(config.beta_load, realization.load_up[s], realization.load_down[s]))
        .collect())
}

/// Realized TPG upper bound `P̃·(1 − β·down + β·up)` per (unit, slot).
pub fn realize_tpg(nominal: &[Vec<f64>], config: &UncertaintyConfig, realization: &Realization) -> Result<Vec<Vec<f64>>> {
    if nominal.len() != realization.tpg_up.len()
        || nominal.iter().zip(&realization.tpg_up).any(|(p, u)| p.len() != u.len())
    {
        return Err(Error::Shape("TPG profile and realization differ in shape".into()));
    }
    nominal
        .iter()
        .enumerate()
        .map(|(k, series)| {
            series
                .iter()
                .enumerate()
                .map(|(s, p)| {
                    let (up, down) = (realization.tpg_up[k][s], realization.tpg_down[k][s]);
                    if up && down {
                        Err(Error::invalid(format!("realization.tpg[{k}][{s}]"), "up and down both set"))
                    } else {
                        Ok(p * factor(config.beta_tpg, up, down))
                    }
                })
                .collect()
        })
        .collect()
}

/// Nominal data together with the uncertainty settings that perturb it.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainScenario {
    pub nominal: Scenario,
    pub config: UncertaintyConfig,
}

impl UncertainScenario {
    pub fn realize(&self, realization: &Realization) -> Result<Scenario> {
        Ok(Scenario {
            load: realize_load(&self.nominal.load, &self.config, realization)?,
            ndu_available: self.nominal.ndu_available.clone(),
            tpg_available: realize_tpg(&self.nominal.tpg_available, &self.config, realization)?,
        })
    }

    pub fn tpg_units(&self) -> usize {
        self.nominal.tpg_available.len()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// `Σ_{m ≤ Γ} C(n, m)·2^m`, saturating.
pub fn group_count(n: usize, budget: usize) -> u128 {
    (0..=budget.min(n) as u128)
        .map(|m| binomial(n as u128, m).saturating_mul(1u128.checked_shl(m as u32).unwrap_or(u128::MAX)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Number of distinct realizations spanned by the groups, saturating.
pub fn count_realizations(groups: &[BudgetGroup]) -> u128 {
    groups.iter().map(|g| group_count(g.coords.len(), g.budget)).fold(1u128, |a, b| a.saturating_mul(b))
}

pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

type Assignment = Vec<(Coord, Direction)>;

fn group_assignments(group: &BudgetGroup) -> Vec<Assignment> {
    fn recurse(coords: &[Coord], left: usize, prefix: &mut Assignment, out: &mut Vec<Assignment>) {
        out.push(prefix.clone());
        if left == 0 {
            return;
        }
        for (i, &c) in coords.iter().enumerate() {
            for dir in [Direction::Up, Direction::Down] {
                prefix.push((c, dir));
                recurse(&coords[i + 1..], left - 1, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    recurse(&group.coords, group.budget, &mut Vec::new(), &mut out);
    out
}

/// Every realization allowed by `groups`, without duplicates.
pub struct RealizationIter {
    base: Realization,
    choices: Vec<Vec<Assignment>>,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for RealizationIter {
    type Item = Realization;

    fn next(&mut self) -> Option<Realization> {
        if self.done {
            return None;
        }
        let mut r = self.base.clone();
        for (g, &i) in self.choices.iter().zip(&self.odometer) {
            for &(coord, dir) in &g[i] {
                r.set(coord, Some(dir));
            }
        }
        self.done = true;
        for (pos, g) in self.odometer.iter_mut().zip(&self.choices) {
            *pos += 1;
            if *pos < g.len() {
                self.done = false;
                break;
            }
            *pos = 0;
        }
        Some(r)
    }
}

/// Stream every valid realization over `groups`, refusing when the count
/// exceeds `cap`.
pub fn enumerate_realizations(
    grid: &TimeGrid,
    tpg_units: usize,
    groups: &[BudgetGroup],
    cap: u128,
) -> Result<RealizationIter> {
    let count = count_realizations(groups);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let choices: Vec<_> = groups.iter().map(group_assignments).collect();
    Ok(RealizationIter {
        base: Realization::nominal(grid, tpg_units),
        odometer: vec![0; choices.len()],
        choices,
        done: false,
    })
}
