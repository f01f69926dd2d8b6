//! Auditing fixed plans and running parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpm::solve_dpm;
use crate::error::Result;
use crate::instance::Instance;
use crate::model::{investment_cost, InvestmentPlan, OperationSchedule, Scenario, TimeGrid};
use crate::robust::{ccg_solve, worst_case, CcgOptions, WorstCaseMethod};
use crate::solver::MilpBackend;
use crate::uncertainty::Realization;

#[derive(Debug, Clone)]
pub struct Dispatch {
    pub schedule: OperationSchedule,
    pub scenario: Scenario,
    pub cost: f64,
}

/// Least-cost operation of a fixed plan under a fixed realization.
pub fn dispatch(
    inst: &Instance,
    plan: &InvestmentPlan,
    realization: &Realization,
    backend: &dyn MilpBackend,
) -> Result<Dispatch> {
    plan.check(&inst.catalog)?;
    let uncertain = inst.uncertain_scenario()?;
    realization.validate(&inst.grid, &inst.uncertainty)?;
    let lp = crate::recourse::RecourseLp::build(
        &inst.catalog,
        &inst.grid,
        &inst.econ,
        &uncertain,
        plan,
        inst.recourse_options(),
    )?;
    let (cost, values) = lp.solve_primal(backend, realization, &inst.solve)?;
    let scenario = uncertain.realize(realization)?;
    let mut schedule = lp.schedule(&values, &inst.catalog, &inst.econ, &scenario)?;
    schedule.cost_inv = investment_cost(&inst.catalog, plan, &inst.grid, &inst.econ)?;
    if schedule.total_water_shortfall() > 1e-6 {
        log::warn!("plan cannot meet water demand: {} t short", schedule.total_water_shortfall());
    }
    Ok(Dispatch { schedule, scenario, cost })
}

#[derive(Debug, Clone)]
pub struct ShedReport {
    /// Σ LS over the horizon, MW.
    pub shed: f64,
    pub realization: Realization,
    pub schedule: OperationSchedule,
    pub scenario: Scenario,
}

/// Load shed by `plan` under its own worst-case realization.
pub fn shed_under_worst(
    inst: &Instance,
    plan: &InvestmentPlan,
    method: WorstCaseMethod,
    backend: &dyn MilpBackend,
) -> Result<ShedReport> {
    let worst = worst_case(inst, plan, method, backend)?;
    Ok(ShedReport {
        shed: worst.schedule.total_shed(),
        realization: worst.realization,
        schedule: worst.schedule,
        scenario: worst.scenario,
    })
}

/// Daily average share of generation per technology (DU, NDU, TPG).
/// Days without generation are skipped; shares sum to one otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GenerationShares {
    pub dispatchable: f64,
    pub renewable: f64,
    pub tidal: f64,
}

pub fn generation_shares(schedule: &OperationSchedule, grid: &TimeGrid) -> GenerationShares {
    let mut acc = GenerationShares::default();
    let mut days = 0usize;
    for di in 0..grid.day_count() {
        let sum = |series: &[Vec<f64>]| -> f64 { series.iter().map(|s| grid.day_slots(di).map(|t| s[t]).sum::<f64>()).sum() };
        let du = sum(&schedule.dispatchable);
        let ndu = sum(&schedule.renewable);
        let tpg = sum(&schedule.tidal);
        let total = du + ndu + tpg;
        if total > 0.0 {
            acc.dispatchable += du / total;
            acc.renewable += ndu / total;
            acc.tidal += tpg / total;
            days += 1;
        }
    }
    if days > 0 {
        let n = days as f64;
        acc.dispatchable /= n;
        acc.renewable /= n;
        acc.tidal /= n;
    }
    acc
}

/// Values swept per axis. An empty axis keeps the instance's own value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    /// Applied to load and tidal deviations alike.
    #[serde(default)]
    pub beta: Vec<f64>,
    /// Applied to load and tidal budgets in every year.
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub delta_t: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepJob {
    Deterministic,
    Robust(CcgOptions),
    /// Worst-case audit of a fixed plan.
    Audit(InvestmentPlan, WorstCaseMethod),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub gamma: f64,
    pub delta_t: i32,
    pub status: String,
    pub total_cost: Option<f64>,
    pub investment_cost: Option<f64>,
    pub operation_cost: Option<f64>,
    pub shed_mw: Option<f64>,
    pub iterations: Option<usize>,
    pub plan: Option<String>,
    pub share_du: Option<f64>,
    pub share_ndu: Option<f64>,
    pub share_tpg: Option<f64>,
}

struct CellResult {
    plan: InvestmentPlan,
    investment: f64,
    schedule: OperationSchedule,
    iterations: Option<usize>,
}

fn run_cell(inst: &Instance, job: &SweepJob, backend: &dyn MilpBackend) -> Result<CellResult> {
    match job {
        SweepJob::Deterministic => {
            let out = solve_dpm(inst, backend)?;
            Ok(CellResult { plan: out.plan, investment: out.costs.investment, schedule: out.schedule, iterations: None })
        }
        SweepJob::Robust(options) => {
            let out = ccg_solve(inst, options, backend)?;
            Ok(CellResult {
                plan: out.plan,
                investment: out.costs.investment,
                schedule: out.schedule,
                iterations: Some(out.state.iteration),
            })
        }
        SweepJob::Audit(plan, method) => {
            let report = shed_under_worst(inst, plan, *method, backend)?;
            let investment = investment_cost(&inst.catalog, plan, &inst.grid, &inst.econ)?;
            Ok(CellResult { plan: plan.clone(), investment, schedule: report.schedule, iterations: None })
        }
    }
}

/// Run `job` over the Cartesian product of the axes. Failed cells are
/// recorded in their row and do not stop the sweep. Rows come back in
/// axis order (β outermost, ΔT innermost).
pub fn sweep(inst: &Instance, axes: &SweepAxes, job: &SweepJob, backend: &dyn MilpBackend) -> Vec<SweepRow> {
    let betas = if axes.beta.is_empty() { vec![inst.uncertainty.beta_load] } else { axes.beta.clone() };
    let gammas = if axes.gamma.is_empty() { vec![inst.uncertainty.gamma_load(0)] } else { axes.gamma.clone() };
    let delays = if axes.delta_t.is_empty() { vec![inst.uncertainty.delta_t] } else { axes.delta_t.clone() };
    let mut cells = Vec::new();
    for &b in &betas {
        for &g in &gammas {
            for &dt in &delays {
                cells.push((b, g, dt));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(beta, gamma, delta_t)| {
            let mut cfg = inst.uncertainty.clone();
            if !axes.beta.is_empty() {
                cfg.beta_load = beta;
                cfg.beta_tpg = beta;
            }
            if !axes.gamma.is_empty() {
                cfg.gamma_load = vec![gamma];
                cfg.gamma_tpg = vec![gamma];
            }
            cfg.delta_t = delta_t;
            let cell = inst.with_uncertainty(cfg);
            let mut row = SweepRow {
                beta,
                gamma,
                delta_t,
                status: "ok".into(),
                total_cost: None,
                investment_cost: None,
                operation_cost: None,
                shed_mw: None,
                iterations: None,
                plan: None,
                share_du: None,
                share_ndu: None,
                share_tpg: None,
            };
            match run_cell(&cell, job, backend) {
                Ok(r) => {
                    let shares = generation_shares(&r.schedule, &inst.grid);
                    row.total_cost = Some(r.investment + r.schedule.cost_ope);
                    row.investment_cost = Some(r.investment);
                    row.operation_cost = Some(r.schedule.cost_ope);
                    row.shed_mw = Some(r.schedule.total_shed());
                    row.iterations = r.iterations;
                    row.plan = Some(r.plan.built_ids(&inst.catalog).join(";"));
                    row.share_du = Some(shares.dispatchable);
                    row.share_ndu = Some(shares.renewable);
                    row.share_tpg = Some(shares.tidal);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect()
}
