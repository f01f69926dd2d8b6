//! Deterministic planning: investment and dispatch against the forecast.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{
    investment_coefficients, investment_cost, CostBreakdown, InvestmentPlan, OperationSchedule, Scenario,
    Technology,
};
use crate::recourse::RecourseLp;
use crate::solver::{Cmp, LinearModel, MilpBackend, ObjSense, VarId};
use crate::uncertainty::Realization;

/// Investment binaries with their discounted costs, plus the adequacy row.
/// Returns the binaries in canonical device order.
pub fn add_first_stage(inst: &Instance, model: &mut LinearModel) -> Result<Vec<VarId>> {
    let catalog = &inst.catalog;
    let (coefficients, constant) = investment_coefficients(catalog, &inst.grid, &inst.econ)?;
    model.objective_offset += constant;
    let x: Vec<VarId> = catalog
        .devices()
        .zip(&coefficients)
        .map(|(d, c)| model.add_binary(format!("x_{}", catalog.id(d)), *c))
        .collect();
    if inst.model.adequacy {
        let peak = inst.peak_load();
        let terms: Vec<_> = catalog
            .devices()
            .zip(&x)
            .filter(|(d, _)| d.tech != Technology::Storage)
            .map(|(d, v)| (*v, catalog.rated_power(d)))
            .collect();
        let available: f64 = terms.iter().map(|(_, p)| p).sum();
        if available + 1e-9 < peak {
            return Err(Error::Infeasible(format!(
                "peak load {peak} MW exceeds the {available} MW of candidate generation"
            )));
        }
        model.add_constraint("adequacy", terms, Cmp::Ge, peak);
    }
    Ok(x)
}

/// Read build decisions back from binary values.
pub fn plan_from_values(inst: &Instance, x: &[VarId], values: &[f64]) -> Result<InvestmentPlan> {
    let flags: Vec<bool> = x.iter().map(|v| values[v.0] > 0.5).collect();
    InvestmentPlan::from_flags(&inst.catalog, &flags)
}

/// The deterministic model together with the handles needed to read it.
#[derive(Debug, Clone)]
pub struct DpmModel {
    pub model: LinearModel,
    pub x: Vec<VarId>,
    pub dispatch: Vec<VarId>,
    pub recourse: RecourseLp,
}

/// Build the deterministic MILP: investment cost plus nominal operation cost.
pub fn build_dpm(inst: &Instance) -> Result<DpmModel> {
    let mut model = LinearModel::new("dpm", ObjSense::Minimize);
    let x = add_first_stage(inst, &mut model)?;
    let scenario = inst.uncertain_scenario()?;
    let recourse = RecourseLp::build(
        &inst.catalog,
        &inst.grid,
        &inst.econ,
        &scenario,
        &InvestmentPlan::all(&inst.catalog),
        inst.recourse_options(),
    )?;
    let nominal = Realization::nominal(&inst.grid, inst.catalog.tidal.len());
    let dispatch = recourse.add_copy(&mut model, &x, &inst.catalog, &nominal, "");
    for (v, c) in recourse.cost_terms(&dispatch) {
        model.set_cost(v, c);
    }
    Ok(DpmModel { model, x, dispatch, recourse })
}

/// A plan with its dispatch and costs under one realization.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: InvestmentPlan,
    pub schedule: OperationSchedule,
    pub costs: CostBreakdown,
    pub realization: Realization,
    pub scenario: Scenario,
    /// Objective reported by the planning MILP.
    pub objective: f64,
}

impl PlanOutcome {
    /// Nonzero water shortfall means the plan cannot meet water demand.
    pub fn meets_water_demand(&self) -> bool {
        self.schedule.total_water_shortfall() <= 1e-6
    }
}

pub fn solve_dpm(inst: &Instance, backend: &dyn MilpBackend) -> Result<PlanOutcome> {
    let dpm = build_dpm(inst)?;
    let out = backend.solve(&dpm.model, &inst.solve)?;
    let (objective, values) = out.expect_optimal("deterministic planning model")?;
    let plan = plan_from_values(inst, &dpm.x, &values)?;
    let realization = Realization::nominal(&inst.grid, inst.catalog.tidal.len());
    let outcome = crate::evaluate::dispatch(inst, &plan, &realization, backend)?;
    let cost_inv = investment_cost(&inst.catalog, &plan, &inst.grid, &inst.econ)?;
    let mut schedule = outcome.schedule;
    schedule.cost_inv = cost_inv;
    let costs = CostBreakdown::new(cost_inv, schedule.cost_ope);
    if schedule.total_water_shortfall() > 1e-6 {
        log::warn!("deterministic plan leaves {} t of water demand unmet", schedule.total_water_shortfall());
    }
    Ok(PlanOutcome { plan, schedule, costs, realization, scenario: outcome.scenario, objective })
}
