//! A validated planning instance: everything a planner needs in one place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::model::{Catalog, EconomicParams, ForecastSet, Scenario, TimeGrid};
use crate::recourse::RecourseOptions;
use crate::tidal::nominal_tpg_profile;
use crate::uncertainty::{UncertainScenario, UncertaintyConfig, DEFAULT_ENUMERATION_CAP};
use crate::solver::SolveOptions;

/// Modelling switches that are not part of the physical data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    /// Bound renewable output by rated power rather than forecast availability.
    pub strict_ndu: bool,
    /// Cap nominal tidal output at rated power.
    pub cap_tidal: bool,
    /// Require installed DU + NDU + TPG power to cover the nominal peak load.
    pub adequacy: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { strict_ndu: false, cap_tidal: true, adequacy: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub catalog: Catalog,
    pub grid: TimeGrid,
    pub econ: EconomicParams,
    pub forecasts: ForecastSet,
    pub uncertainty: UncertaintyConfig,
    pub model: ModelOptions,
    pub solve: SolveOptions,
    /// Largest number of realizations the enumeration oracle will visit.
    pub enumeration_cap: u128,
}

impl Instance {
    /// Bundle and validate, reporting every problem found.
    pub fn new(
        catalog: Catalog,
        grid: TimeGrid,
        econ: EconomicParams,
        forecasts: ForecastSet,
        uncertainty: UncertaintyConfig,
    ) -> Result<Self> {
        let inst = Self {
            catalog,
            grid,
            econ,
            forecasts,
            uncertainty,
            model: ModelOptions::default(),
            solve: SolveOptions::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        };
        let issues = inst.validate();
        if issues.is_empty() {
            Ok(inst)
        } else {
            Err(Error::Invalid(issues))
        }
    }

    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = self.grid.validate();
        issues.extend(self.catalog.validate());
        if issues.is_empty() {
            issues.extend(self.catalog.validate_against(&self.grid));
            issues.extend(self.econ.validate(&self.catalog));
            issues.extend(self.forecasts.validate(&self.grid, &self.catalog));
            issues.extend(self.uncertainty.validate(&self.grid));
        }
        issues
    }

    pub fn with_uncertainty(&self, uncertainty: UncertaintyConfig) -> Self {
        Self { uncertainty, ..self.clone() }
    }

    pub fn recourse_options(&self) -> RecourseOptions {
        RecourseOptions { strict_ndu: self.model.strict_ndu }
    }

    /// Nominal load, availability and delayed tidal profile.
    pub fn nominal_scenario(&self) -> Result<Scenario> {
        let tpg = nominal_tpg_profile(
            &self.forecasts,
            &self.catalog.tidal,
            &self.grid,
            self.uncertainty.delta_t,
            &self.econ,
            self.model.cap_tidal,
        )?;
        Ok(Scenario {
            load: self.forecasts.load.clone(),
            ndu_available: self.forecasts.ndu_availability.clone(),
            tpg_available: tpg,
        })
    }

    pub fn uncertain_scenario(&self) -> Result<UncertainScenario> {
        Ok(UncertainScenario { nominal: self.nominal_scenario()?, config: self.uncertainty.clone() })
    }

    /// Nominal peak load the adequacy constraint must cover.
    pub fn peak_load(&self) -> f64 {
        self.forecasts.peak_load()
    }
}
