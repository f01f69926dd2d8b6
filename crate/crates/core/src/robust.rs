//! Robust planning by column-and-constraint generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpm::{add_first_stage, plan_from_values};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{investment_cost, CostBreakdown, InvestmentPlan, OperationSchedule, Scenario};
use crate::recourse::RecourseLp;
use crate::solver::{Cmp, LinearModel, MilpBackend, ObjSense};
use crate::uncertainty::{budget_groups, enumerate_realizations, Realization, Restriction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorstCaseMethod {
    /// Dualize the dispatch LP and solve one MILP over the deviation flags.
    #[default]
    #[serde(alias = "dual")]
    DualMilp,
    /// Solve the dispatch LP for every realization.
    #[serde(alias = "enum")]
    Enumerate,
}

/// Enlargements of the dual box tried before giving up.
const BOX_RETRIES: usize = 3;

#[derive(Debug, Clone)]
pub struct WorstCase {
    pub realization: Realization,
    pub cost: f64,
    pub schedule: OperationSchedule,
    pub scenario: Scenario,
}

fn recourse_for(inst: &Instance, plan: &InvestmentPlan) -> Result<RecourseLp> {
    RecourseLp::build(&inst.catalog, &inst.grid, &inst.econ, &inst.uncertain_scenario()?, plan, inst.recourse_options())
}

/// The realization that maximizes the dispatch cost of `plan`.
pub fn worst_case(
    inst: &Instance,
    plan: &InvestmentPlan,
    method: WorstCaseMethod,
    backend: &dyn MilpBackend,
) -> Result<WorstCase> {
    plan.check(&inst.catalog)?;
    let lp = recourse_for(inst, plan)?;
    let restriction = Restriction { load: true, tpg_units: plan.tidal.clone() };
    let groups = budget_groups(&inst.grid, &inst.uncertainty, &restriction)?;
    let units = inst.catalog.tidal.len();

    let (realization, cost, values) = if groups.is_empty() {
        let r = Realization::nominal(&inst.grid, units);
        let (cost, values) = lp.solve_primal(backend, &r, &inst.solve)?;
        (r, cost, values)
    } else {
        match method {
            WorstCaseMethod::Enumerate => {
                let candidates = enumerate_realizations(&inst.grid, units, &groups, inst.enumeration_cap)?;
                let best = candidates
                    .enumerate()
                    .par_bridge()
                    .map(|(i, r)| lp.solve_primal(backend, &r, &inst.solve).map(|(c, v)| (i, r, c, v)))
                    .try_reduce_with(|a, b| {
                        let a_wins = a.2 > b.2 || (a.2 == b.2 && a.0 < b.0);
                        Ok(if a_wins { a } else { b })
                    })
                    .expect("the nominal realization is always enumerated")?;
                (best.1, best.2, best.3)
            }
            WorstCaseMethod::DualMilp => dual_worst_case(inst, &lp, &groups, backend)?,
        }
    };
    let scenario = inst.uncertain_scenario()?.realize(&realization)?;
    let schedule = lp.schedule(&values, &inst.catalog, &inst.econ, &scenario)?;
    Ok(WorstCase { realization, cost, schedule, scenario })
}

fn dual_worst_case(
    inst: &Instance,
    lp: &RecourseLp,
    groups: &[crate::uncertainty::BudgetGroup],
    backend: &dyn MilpBackend,
) -> Result<(Realization, f64, Vec<f64>)> {
    let units = inst.catalog.tidal.len();
    // The realization is all that is kept; its cost comes from an exact
    // dispatch below, so only the gap needs to be tight.
    let options = crate::solver::SolveOptions { rel_gap: inst.solve.rel_gap.min(1e-9), ..inst.solve.clone() };
    let mut scale = 1.0;
    let mut last_saturated = String::new();
    for attempt in 0..=BOX_RETRIES {
        let dual = lp.dual_milp(groups, scale)?;
        let (objective, values) = backend.solve(&dual.model, &options)?.expect_optimal("worst-case MILP")?;
        let objective = objective * dual.unit;
        let realization = dual.realization(&values, &inst.grid, units);
        let (exact, primal) = lp.solve_primal(backend, &realization, &inst.solve)?;
        // A box that cuts off every optimal dual at the chosen realization
        // shows up as a MILP value below the exact dispatch cost.
        let tol = 1e-6 * exact.abs().max(1.0);
        if objective > exact + tol {
            log::warn!("worst-case MILP value {objective} exceeds the dispatch cost {exact} of its realization");
        }
        if objective >= exact - tol {
            return Ok((realization, exact, primal));
        }
        last_saturated = dual.saturated(&values).first().map(|b| b.name.clone()).unwrap_or_default();
        log::debug!("dual box too small at attempt {attempt} ({objective} < {exact}); enlarging");
        scale *= 10.0;
    }
    Err(Error::BigMOverflow { constraint: last_saturated, attempts: BOX_RETRIES })
}

#[derive(Debug, Clone)]
pub struct MasterOutcome {
    pub plan: InvestmentPlan,
    pub lower_bound: f64,
    pub objective: f64,
    pub columns: usize,
}

/// Minimize investment plus the largest dispatch cost over the pooled
/// realizations, each with its own copy of the dispatch variables.
pub fn master_solve(inst: &Instance, pool: &[Realization], backend: &dyn MilpBackend) -> Result<MasterOutcome> {
    master_solve_with_gap(inst, pool, backend, inst.solve.rel_gap)
}

fn master_solve_with_gap(
    inst: &Instance,
    pool: &[Realization],
    backend: &dyn MilpBackend,
    rel_gap: f64,
) -> Result<MasterOutcome> {
    let mut model = LinearModel::new("master", ObjSense::Minimize);
    let x = add_first_stage(inst, &mut model)?;
    let eta = model.add_var("eta", 0.0, f64::INFINITY, 1.0);
    if !pool.is_empty() {
        let lp = RecourseLp::build(
            &inst.catalog,
            &inst.grid,
            &inst.econ,
            &inst.uncertain_scenario()?,
            &InvestmentPlan::all(&inst.catalog),
            inst.recourse_options(),
        )?;
        for (n, r) in pool.iter().enumerate() {
            let ids = lp.add_copy(&mut model, &x, &inst.catalog, r, &format!("s{n}_"));
            let mut terms: Vec<_> = lp.cost_terms(&ids).into_iter().map(|(v, c)| (v, -c)).collect();
            terms.push((eta, 1.0));
            model.add_constraint(format!("epigraph_s{n}"), terms, Cmp::Ge, 0.0);
        }
    }
    let options = crate::solver::SolveOptions { rel_gap, ..inst.solve.clone() };
    let out = backend.solve(&model, &options)?;
    let bound = out.bound;
    let (objective, values) = out.expect_optimal("master problem")?;
    let plan = plan_from_values(inst, &x, &values)?;
    Ok(MasterOutcome { plan, lower_bound: bound.unwrap_or(objective).min(objective), objective, columns: model.num_vars() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcgOptions {
    pub eps: f64,
    pub max_iter: usize,
    pub method: WorstCaseMethod,
}

impl Default for CcgOptions {
    fn default() -> Self {
        Self { eps: 1e-4, max_iter: 50, method: WorstCaseMethod::DualMilp }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub investment: f64,
    pub worst_operation: f64,
    pub pool_size: usize,
    pub master_columns: usize,
    pub plan: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CcgStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct CcgState {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub pool: Vec<Realization>,
    pub trace: Vec<IterationRecord>,
    pub status: CcgStatus,
}

impl CcgState {
    pub fn gap(&self) -> f64 {
        relative_gap(self.lower_bound, self.upper_bound)
    }
}

pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    ((upper - lower) / upper.abs().max(1e-9)).max(0.0)
}

#[derive(Debug, Clone)]
pub struct CcgOutcome {
    pub plan: InvestmentPlan,
    pub state: CcgState,
    pub realization: Realization,
    pub schedule: OperationSchedule,
    pub scenario: Scenario,
    pub costs: CostBreakdown,
}

impl CcgOutcome {
    pub fn meets_water_demand(&self) -> bool {
        self.schedule.total_water_shortfall() <= 1e-6
    }
}

/// Solve the robust planning problem.
pub fn ccg_solve(inst: &Instance, options: &CcgOptions, backend: &dyn MilpBackend) -> Result<CcgOutcome> {
    if !(options.eps > 0.0) || options.max_iter == 0 {
        return Err(Error::invalid("ccg", "eps must be > 0 and max_iter >= 1"));
    }
    inst.uncertainty.check(&inst.grid)?;
    // Keep the master's own tolerance well inside the convergence target.
    let master_gap = inst.solve.rel_gap.min(options.eps * 1e-2);
    let mut state = CcgState {
        iteration: 0,
        lower_bound: f64::NEG_INFINITY,
        upper_bound: f64::INFINITY,
        pool: Vec::new(),
        trace: Vec::new(),
        status: CcgStatus::IterationLimit,
    };
    let mut incumbent: Option<(InvestmentPlan, WorstCase, f64)> = None;

    while state.iteration < options.max_iter {
        state.iteration += 1;
        let master = master_solve_with_gap(inst, &state.pool, backend, master_gap)?;
        state.lower_bound = state.lower_bound.max(master.lower_bound);
        let worst = worst_case(inst, &master.plan, options.method, backend)?;
        let inv = investment_cost(&inst.catalog, &master.plan, &inst.grid, &inst.econ)?;
        let candidate = inv + worst.cost;
        let repeated = state.pool.contains(&worst.realization);
        if candidate < state.upper_bound {
            state.upper_bound = candidate;
            incumbent = Some((master.plan.clone(), worst.clone(), inv));
        }
        state.trace.push(IterationRecord {
            iteration: state.iteration,
            lower_bound: state.lower_bound,
            upper_bound: state.upper_bound,
            gap: state.gap(),
            investment: inv,
            worst_operation: worst.cost,
            pool_size: state.pool.len(),
            master_columns: master.columns,
            plan: master.plan.built_ids(&inst.catalog).into_iter().map(String::from).collect(),
        });
        log::info!(
            "iteration {}: LB {:.6e} UB {:.6e} gap {:.3e}",
            state.iteration,
            state.lower_bound,
            state.upper_bound,
            state.gap()
        );
        if state.gap() <= options.eps || repeated {
            if state.gap() <= options.eps.max(master_gap * 10.0) {
                state.status = CcgStatus::Converged;
            }
            break;
        }
        state.pool.push(worst.realization);
    }
    let (plan, worst, inv) = incumbent.expect("at least one iteration ran");
    if state.status == CcgStatus::IterationLimit {
        log::warn!("no convergence in {} iterations; gap {:.3e}", state.iteration, state.gap());
    }
    if worst.schedule.total_water_shortfall() > 1e-6 {
        log::warn!("robust plan leaves {} t of water demand unmet", worst.schedule.total_water_shortfall());
    }
    let mut schedule = worst.schedule;
    schedule.cost_inv = inv;
    let costs = CostBreakdown::new(inv, schedule.cost_ope);
    Ok(CcgOutcome { plan, state, realization: worst.realization, schedule, scenario: worst.scenario, costs })
}
