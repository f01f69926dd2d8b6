//! Run configuration: one JSON file that references a forecast CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use omplan_core::evaluate::SweepAxes;
use omplan_core::instance::{Instance, ModelOptions};
use omplan_core::model::{Catalog, EconomicParams, ForecastSet, TimeGrid};
use omplan_core::robust::CcgOptions;
use omplan_core::solver::SolveOptions;
use omplan_core::uncertainty::{UncertaintyConfig, DEFAULT_ENUMERATION_CAP};
use omplan_core::{Error, Issue, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Backend name; falls back to `OM_SOLVER`, then HiGHS.
    pub backend: Option<String>,
    pub rel_gap: f64,
    /// Seconds per solve.
    pub time_limit: Option<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self { backend: None, rel_gap: d.rel_gap, time_limit: d.time_limit, seed: d.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: TimeGrid,
    pub catalog: Catalog,
    /// Forecast CSV, relative to the config file.
    pub forecasts: PathBuf,
    #[serde(default)]
    pub economics: EconomicParams,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub ccg: CcgOptions,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP as u64
}

/// A validated configuration with everything a run needs.
#[derive(Debug, Clone)]
pub struct RunBundle {
    pub config: RunConfig,
    pub instance: Instance,
    /// SHA-256 of each input file, keyed by the path as given.
    pub input_hashes: BTreeMap<String, String>,
}

impl RunBundle {
    /// Rebuild the instance after the config was edited in place.
    pub fn rebuild(&mut self) -> Result<()> {
        self.instance = assemble(&self.config, self.instance.forecasts.clone())?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::invalid(path.display().to_string(), format!("cannot read: {e}")))
}

/// Load, parse and validate a run configuration. Every problem found is
/// reported at once.
pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunBundle> {
    let path = path.as_ref();
    let raw = read(path)?;
    let config: RunConfig =
        serde_json::from_slice(&raw).map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let csv_path = base.join(&config.forecasts);
    let csv_raw = read(&csv_path)?;

    let mut issues = config.grid.validate();
    let grid_ok = issues.is_empty();
    issues.extend(config.catalog.validate());
    let forecasts = if grid_ok {
        let (forecasts, csv_issues) = parse_forecasts(&csv_raw, &config.grid, &config.catalog);
        issues.extend(csv_issues);
        forecasts
    } else {
        None
    };
    issues.extend(options_issues(&config));
    let instance = match forecasts {
        Some(f) => match assemble(&config, f) {
            Ok(inst) => Some(inst),
            Err(Error::Invalid(more)) => {
                issues.extend(more);
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    match instance {
        Some(instance) if issues.is_empty() => {
            let mut input_hashes = BTreeMap::new();
            input_hashes.insert(path.display().to_string(), sha256_hex(&raw));
            input_hashes.insert(csv_path.display().to_string(), sha256_hex(&csv_raw));
            Ok(RunBundle { config, instance, input_hashes })
        }
        _ => {
            // Instance validation repeats the catalog checks done above.
            let mut seen = std::collections::BTreeSet::new();
            issues.retain(|i| seen.insert((i.field.clone(), i.message.clone())));
            Err(Error::Invalid(issues))
        }
    }
}

fn options_issues(config: &RunConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    if !(config.ccg.eps > 0.0 && config.ccg.eps.is_finite()) {
        issues.push(Issue::new("ccg.eps", format!("must be > 0 (got {})", config.ccg.eps)));
    }
    if config.ccg.max_iter == 0 {
        issues.push(Issue::new("ccg.max_iter", "must be at least 1"));
    }
    if !(config.solver.rel_gap >= 0.0 && config.solver.rel_gap < 1.0) {
        issues.push(Issue::new("solver.rel_gap", format!("must lie in [0, 1) (got {})", config.solver.rel_gap)));
    }
    if let Some(t) = config.solver.time_limit {
        if !(t > 0.0) {
            issues.push(Issue::new("solver.time_limit", format!("must be > 0 (got {t})")));
        }
    }
    for (axis, values) in [("sweep.beta", &config.sweep.beta), ("sweep.gamma", &config.sweep.gamma)] {
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                issues.push(Issue::new(format!("{axis}[{i}]"), format!("must lie in [0, 1] (got {v})")));
            }
        }
    }
    issues
}

/// Build the instance from a parsed config and forecasts.
pub fn assemble(config: &RunConfig, forecasts: ForecastSet) -> Result<Instance> {
    let mut inst = Instance::new(
        config.catalog.clone(),
        config.grid.clone(),
        config.economics.clone(),
        forecasts,
        config.uncertainty.clone(),
    )?;
    inst.model = config.model;
    inst.solve = SolveOptions {
        rel_gap: config.solver.rel_gap,
        time_limit: config.solver.time_limit,
        seed: config.solver.seed,
        ..SolveOptions::default()
    };
    inst.enumeration_cap = u128::from(config.enumeration_cap);
    Ok(inst)
}

const YEAR: &str = "year";
const DAY: &str = "day";
const HOUR: &str = "hour";
const LOAD: &str = "load_mw";
const TIDE: &str = "tidal_height_m";

/// Column header for a renewable unit's availability.
pub fn availability_column(id: &str) -> String {
    format!("{id}_mw")
}

/// Parse a forecast CSV with one row per (year, day, hour), all one-based.
/// Columns: year, day, hour, load_mw, tidal_height_m and `<id>_mw` for
/// every renewable unit. Row order is free.
pub fn parse_forecasts(raw: &[u8], grid: &TimeGrid, catalog: &Catalog) -> (Option<ForecastSet>, Vec<Issue>) {
    let mut issues = Vec::new();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return (None, vec![Issue::new("forecast", e.to_string())]),
    };
    let mut wanted = vec![YEAR.to_string(), DAY.into(), HOUR.into(), LOAD.into(), TIDE.into()];
    wanted.extend(catalog.renewable.iter().map(|u| availability_column(&u.id)));
    let columns: Vec<Option<usize>> = wanted.iter().map(|w| headers.iter().position(|h| h == w)).collect();
    for (name, col) in wanted.iter().zip(&columns) {
        if col.is_none() {
            issues.push(Issue::new("forecast", format!("missing column `{name}`")));
        }
    }
    if !issues.is_empty() {
        return (None, issues);
    }
    let columns: Vec<usize> = columns.into_iter().flatten().collect();

    let n = grid.slots();
    let series = 2 + catalog.renewable.len();
    let mut values = vec![vec![f64::NAN; n]; series];
    let mut seen = vec![false; n];
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                issues.push(Issue::new(format!("forecast line {line}"), e.to_string()));
                continue;
            }
        };
        let field = |c: usize| record.get(columns[c]).unwrap_or("");
        let mut index = [0usize; 3];
        let limits = [grid.years, grid.days, grid.hours_per_day];
        let mut ok = true;
        for c in 0..3 {
            match field(c).parse::<usize>() {
                Ok(v) if (1..=limits[c]).contains(&v) => index[c] = v - 1,
                _ => {
                    issues.push(Issue::new(
                        format!("forecast line {line}.{}", wanted[c]),
                        format!("must be an integer in 1..={} (got `{}`)", limits[c], field(c)),
                    ));
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        let slot = grid.slot(index[0], index[1], index[2]);
        let at = format!("(y={},d={},h={})", index[0] + 1, index[1] + 1, index[2] + 1);
        if std::mem::replace(&mut seen[slot], true) {
            issues.push(Issue::new(format!("forecast{at}"), format!("duplicate row on line {line}")));
            continue;
        }
        for (s, target) in values.iter_mut().enumerate() {
            match field(3 + s).parse::<f64>() {
                Ok(v) => target[slot] = v,
                Err(_) => issues.push(Issue::new(
                    format!("forecast{at}.{}", wanted[3 + s]),
                    format!("not a number: `{}`", field(3 + s)),
                )),
            }
        }
    }
    for (slot, present) in seen.iter().enumerate() {
        if !present {
            let (y, d, h) = grid.coords(slot);
            issues.push(Issue::new(format!("forecast(y={},d={},h={})", y + 1, d + 1, h + 1), "missing row"));
        }
    }
    if !issues.is_empty() {
        return (None, issues);
    }
    let mut values = values.into_iter();
    let load = values.next().unwrap_or_default();
    let tidal_height = values.next().unwrap_or_default();
    (Some(ForecastSet { load, ndu_availability: values.collect(), tidal_height }), issues)
}

/// Write forecasts in the format [`parse_forecasts`] reads.
pub fn write_forecasts(path: &Path, forecasts: &ForecastSet, grid: &TimeGrid, catalog: &Catalog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec![YEAR.to_string(), DAY.into(), HOUR.into(), LOAD.into(), TIDE.into()];
    header.extend(catalog.renewable.iter().map(|u| availability_column(&u.id)));
    w.write_record(&header).map_err(csv_error)?;
    for slot in 0..grid.slots() {
        let (y, d, h) = grid.coords(slot);
        let mut row = vec![(y + 1).to_string(), (d + 1).to_string(), (h + 1).to_string()];
        row.push(forecasts.load[slot].to_string());
        row.push(forecasts.tidal_height[slot].to_string());
        row.extend(forecasts.ndu_availability.iter().map(|s| s[slot].to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid("csv", format!("{other:?}")),
    }
}
