mod common;

use common::{admissible_plans, desal, du, exhaustive_robust, gamma_for, random_toy, rel_diff, single_day, tpg};
use omplan_core::dpm::solve_dpm;
use omplan_core::evaluate::dispatch;
use omplan_core::model::{investment_cost, Catalog, InvestmentPlan};
use omplan_core::robust::{ccg_solve, master_solve, worst_case, CcgOptions, CcgStatus, WorstCaseMethod};
use omplan_core::solver::HighsBackend;
use omplan_core::uncertainty::{budget_groups, enumerate_realizations, Realization, Restriction, UncertaintyConfig};
use omplan_core::Error;
use proptest::prelude::*;

fn load_only(beta: f64, budget: usize, hours: usize) -> UncertaintyConfig {
    UncertaintyConfig { beta_load: beta, gamma_load: vec![gamma_for(budget, hours)], ..Default::default() }
}

#[test]
fn empty_pool_minimizes_investment_alone() {
    for seed in 0..6 {
        let inst = random_toy(seed);
        let master = master_solve(&inst, &[], &HighsBackend).unwrap();
        let cheapest = admissible_plans(&inst)
            .iter()
            .map(|p| investment_cost(&inst.catalog, p, &inst.grid, &inst.econ).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(rel_diff(master.objective, cheapest) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn nominal_pool_reproduces_the_deterministic_model() {
    for seed in 0..6 {
        let inst = random_toy(seed);
        let nominal = Realization::nominal(&inst.grid, inst.catalog.tidal.len());
        let master = master_solve(&inst, std::slice::from_ref(&nominal), &HighsBackend).unwrap();
        let dpm = solve_dpm(&inst, &HighsBackend).unwrap();
        assert!(rel_diff(master.objective, dpm.objective) <= 1e-6, "seed {seed}");
        let twice = master_solve(&inst, &[nominal.clone(), nominal], &HighsBackend).unwrap();
        assert!(rel_diff(twice.objective, master.objective) <= 1e-9, "seed {seed}");
        assert!(twice.columns > master.columns);
    }
}

#[test]
fn zero_budget_worst_case_is_nominal() {
    let mut inst = random_toy(3);
    inst.uncertainty.gamma_load = vec![0.0];
    inst.uncertainty.gamma_tpg = vec![0.0];
    let plan = InvestmentPlan::all(&inst.catalog);
    for method in [WorstCaseMethod::DualMilp, WorstCaseMethod::Enumerate] {
        let w = worst_case(&inst, &plan, method, &HighsBackend).unwrap();
        assert_eq!(w.realization.deviations(), 0);
        let nominal = dispatch(&inst, &plan, &w.realization, &HighsBackend).unwrap();
        assert!(rel_diff(w.cost, nominal.cost) <= 1e-12);
    }
}

#[test]
fn larger_load_hour_is_pushed_up() {
    let cat = Catalog {
        dispatchable: vec![du("du1", 10.0, 100.0, 1.0)],
        renewable: vec![],
        storage: vec![],
        tidal: vec![],
        desalination: desal(0.0),
    };
    let inst = single_day(cat, vec![2.0, 3.0], vec![0.0; 2], load_only(0.5, 1, 2));
    let plan = InvestmentPlan::all(&inst.catalog);
    let groups = budget_groups(&inst.grid, &inst.uncertainty, &Restriction::all(0)).unwrap();
    assert_eq!(enumerate_realizations(&inst.grid, 0, &groups, 100).unwrap().count(), 5);
    for method in [WorstCaseMethod::DualMilp, WorstCaseMethod::Enumerate] {
        let w = worst_case(&inst, &plan, method, &HighsBackend).unwrap();
        assert_eq!((w.realization.load_up.clone(), w.realization.deviations()), (vec![false, true], 1), "{method:?}");
        assert!(rel_diff(w.cost, 100.0 * (2.0 + 4.5)) <= 1e-9);
    }
}

#[test]
fn tidal_flags_are_inert_without_tidal_units() {
    let mut cat = Catalog {
        dispatchable: vec![du("du1", 8.0, 100.0, 1.0)],
        renewable: vec![],
        storage: vec![],
        tidal: vec![tpg("tpg1", 2.0, 1.0)],
        desalination: desal(1.0),
    };
    cat.dispatchable.push(du("du2", 2.0, 50.0, 1.0));
    let cfg = UncertaintyConfig {
        beta_load: 0.5,
        beta_tpg: 0.5,
        gamma_load: vec![gamma_for(1, 3)],
        gamma_tpg: vec![gamma_for(2, 3)],
        ..Default::default()
    };
    let inst = single_day(cat, vec![3.0, 4.0, 2.0], vec![2.0, 1.0, 3.0], cfg);
    let plan = InvestmentPlan::from_ids(&inst.catalog, &["du1", "du2"]).unwrap();
    let groups = budget_groups(&inst.grid, &inst.uncertainty, &Restriction::all(1)).unwrap();
    for r in enumerate_realizations(&inst.grid, 1, &groups, 10_000).unwrap() {
        let mut load_part = r.clone();
        load_part.tpg_up = vec![vec![false; 3]];
        load_part.tpg_down = vec![vec![false; 3]];
        let a = dispatch(&inst, &plan, &r, &HighsBackend).unwrap().cost;
        let b = dispatch(&inst, &plan, &load_part, &HighsBackend).unwrap().cost;
        assert!(rel_diff(a, b) <= 1e-12);
    }
    let dual = worst_case(&inst, &plan, WorstCaseMethod::DualMilp, &HighsBackend).unwrap();
    let enumerated = worst_case(&inst, &plan, WorstCaseMethod::Enumerate, &HighsBackend).unwrap();
    assert!(rel_diff(dual.cost, enumerated.cost) <= 1e-6);
}

#[test]
fn enumeration_cap_is_enforced() {
    let mut inst = random_toy(1);
    inst.uncertainty = UncertaintyConfig::symmetric(0.5, gamma_for(2, inst.grid.hours_per_day));
    inst.enumeration_cap = 3;
    let plan = InvestmentPlan::all(&inst.catalog);
    let err = worst_case(&inst, &plan, WorstCaseMethod::Enumerate, &HighsBackend).unwrap_err();
    assert!(matches!(err, Error::EnumerationCap { cap: 3, .. }), "{err}");
}

#[test]
fn deterministic_settings_converge_to_the_deterministic_plan() {
    for seed in 0..6 {
        let mut inst = random_toy(seed);
        inst.uncertainty = UncertaintyConfig::deterministic();
        let out = ccg_solve(&inst, &CcgOptions::default(), &HighsBackend).unwrap();
        let dpm = solve_dpm(&inst, &HighsBackend).unwrap();
        assert!(out.state.iteration <= 2, "seed {seed}: {} iterations", out.state.iteration);
        assert_eq!(out.state.status, CcgStatus::Converged);
        assert!(rel_diff(out.costs.total, dpm.costs.total) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn robust_cost_bounds_deterministic_cost() {
    for seed in 0..8 {
        let inst = random_toy(seed);
        let out = ccg_solve(&inst, &CcgOptions::default(), &HighsBackend).unwrap();
        let dpm = solve_dpm(&inst, &HighsBackend).unwrap();
        assert!(out.costs.total >= dpm.costs.total - 1e-6 * dpm.costs.total, "seed {seed}");
    }
}

#[test]
fn pool_grows_without_repeats() {
    for seed in 0..8 {
        let inst = random_toy(seed);
        let out = ccg_solve(&inst, &CcgOptions { eps: 1e-4, ..Default::default() }, &HighsBackend).unwrap();
        for (i, r) in out.state.pool.iter().enumerate() {
            assert!(!out.state.pool[..i].contains(r), "seed {seed}: realization pooled twice");
        }
        let columns: Vec<usize> = out.state.trace.iter().map(|r| r.master_columns).collect();
        assert!(columns.windows(2).all(|w| w[1] > w[0]), "seed {seed}: {columns:?}");
        assert!(out.state.gap() <= 1e-4);
    }
}

#[test]
fn enumeration_method_reaches_the_same_optimum() {
    for seed in [2u64, 5, 9] {
        let inst = random_toy(seed);
        let dual = ccg_solve(&inst, &CcgOptions::default(), &HighsBackend).unwrap();
        let options = CcgOptions { method: WorstCaseMethod::Enumerate, ..Default::default() };
        let enumerated = ccg_solve(&inst, &options, &HighsBackend).unwrap();
        assert!(rel_diff(dual.costs.total, enumerated.costs.total) <= 1e-6, "seed {seed}");
        let (_, brute) = exhaustive_robust(&inst, &HighsBackend);
        assert!(rel_diff(dual.costs.total, brute) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn invalid_options_are_rejected() {
    let inst = random_toy(0);
    for options in [CcgOptions { eps: 0.0, ..Default::default() }, CcgOptions { max_iter: 0, ..Default::default() }] {
        assert!(matches!(ccg_solve(&inst, &options, &HighsBackend), Err(Error::Invalid(_))));
    }
}

#[test]
fn iteration_limit_returns_incumbent() {
    let inst = (0..50).map(random_toy).find(|i| {
        let out = ccg_solve(i, &CcgOptions::default(), &HighsBackend).unwrap();
        out.state.iteration > 2
    });
    let Some(inst) = inst else { return };
    let out = ccg_solve(&inst, &CcgOptions { max_iter: 1, ..Default::default() }, &HighsBackend).unwrap();
    assert_eq!(out.state.status, CcgStatus::IterationLimit);
    assert_eq!(out.state.iteration, 1);
    assert!(out.costs.total.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn dual_matches_enumeration_on_any_plan(seed in 0u64..10_000, pick in 0usize..64) {
        let inst = random_toy(seed);
        let plans = admissible_plans(&inst);
        let plan = &plans[pick % plans.len()];
        let dual = worst_case(&inst, plan, WorstCaseMethod::DualMilp, &HighsBackend).unwrap();
        let enumerated = worst_case(&inst, plan, WorstCaseMethod::Enumerate, &HighsBackend).unwrap();
        prop_assert!(rel_diff(dual.cost, enumerated.cost) <= 1e-6, "{} vs {}", dual.cost, enumerated.cost);
        dual.realization.validate(&inst.grid, &inst.uncertainty).unwrap();
    }

    #[test]
    fn robust_cost_grows_with_budget(seed in 0u64..10_000) {
        let inst = random_toy(seed);
        let h = inst.grid.hours_per_day;
        let mut last = f64::NEG_INFINITY;
        for budget in 0..=2 {
            let cfg = UncertaintyConfig { gamma_load: vec![gamma_for(budget, h)], gamma_tpg: vec![gamma_for(budget, h)], ..inst.uncertainty.clone() };
            let total = ccg_solve(&inst.with_uncertainty(cfg), &CcgOptions::default(), &HighsBackend).unwrap().costs.total;
            prop_assert!(total >= last - 1e-6 * total.abs(), "{total} < {last}");
            last = total;
        }
    }
}
