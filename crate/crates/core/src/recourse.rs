//! The second-stage dispatch problem in a structured form.
//!
//! A [`RecourseLp`] keeps every variable bound and row right-hand side as an
//! affine function of the deviation flags. The same structure is turned into
//! a plain LP for a fixed realization, copied into a master problem, or
//! dualized into the worst-case MILP.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    operation_cost, Catalog, DeviceRef, EconomicParams, InvestmentPlan, OperationSchedule, Scenario, Technology,
    TimeGrid,
};
use crate::solver::{Cmp, LinearModel, MilpBackend, ObjSense, SolveOptions, VarId};
use crate::uncertainty::{BudgetGroup, Coord, Direction, Realization, UncertainScenario};

/// `constant + Σ coef·u[coord, dir]`
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(Coord, Direction, f64)>,
}

impl Affine {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    /// `nominal·(1 − β·down + β·up)` at `coord`.
    pub fn deviating(nominal: f64, beta: f64, coord: Coord) -> Self {
        let mut a = Self::constant(nominal);
        if nominal != 0.0 && beta != 0.0 {
            a.terms.push((coord, Direction::Up, beta * nominal));
            a.terms.push((coord, Direction::Down, -beta * nominal));
        }
        a
    }

    pub fn eval(&self, r: &Realization) -> f64 {
        self.constant
            + self.terms.iter().filter(|(c, d, _)| r.get(*c) == Some(*d)).map(|(_, _, coef)| coef).sum::<f64>()
    }

    pub fn is_uncertain(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RVar {
    pub name: String,
    pub cost: f64,
    /// `None` means unbounded above. The lower bound is always zero.
    pub upper: Option<Affine>,
    /// Device whose build decision multiplies the upper bound.
    pub device: Option<DeviceRef>,
    /// Initial box for the bound's dual when the bound is uncertain.
    pub dual_box: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: Affine,
    /// Range `(lo, hi)` known to contain an optimal row dual.
    pub dual_box: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecourseOptions {
    /// Bound renewable output by rated power instead of forecast availability.
    pub strict_ndu: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Layout {
    du: Vec<Option<Vec<usize>>>,
    ndu: Vec<Option<Vec<usize>>>,
    tpg: Vec<Option<Vec<usize>>>,
    ch: Vec<Option<Vec<usize>>>,
    dch: Vec<Option<Vec<usize>>>,
    soc: Vec<Option<Vec<usize>>>,
    water: Vec<usize>,
    shed: Vec<usize>,
    shortfall: Vec<usize>,
}

/// Structured dispatch LP for one set of included devices.
#[derive(Debug, Clone, PartialEq)]
pub struct RecourseLp {
    pub vars: Vec<RVar>,
    pub rows: Vec<RRow>,
    pub grid: TimeGrid,
    pub nominal_load: Vec<f64>,
    pub beta_load: f64,
    /// Weighted shed penalty per slot: the most a unit of load can cost.
    pub price_cap: Vec<f64>,
    layout: Layout,
}

/// Initial box `(lo, hi)` for the price of energy in a slot of weight `weight`.
///
/// Every source can be turned down and shedding is always available, so the
/// dispatch cost never falls when load rises and the price is nonnegative.
/// Shedding caps the marginal cost of load at the weighted shed penalty.
/// Prices above the cap arise only when water demand cannot be met even with
/// all load shed; the worst-case search enlarges the box when it binds.
pub fn price_box(econ: &EconomicParams, weight: f64) -> (f64, f64) {
    (0.0, weight.max(f64::MIN_POSITIVE) * econ.shed_penalty)
}

/// Deviations that can never raise the dispatch cost: lower load leaves the
/// cost no higher, and more tidal output only relaxes a bound.
pub fn is_dominated(coord: Coord, dir: Direction) -> bool {
    matches!((coord, dir), (Coord::Load(_), Direction::Down) | (Coord::Tpg(..), Direction::Up))
}

impl RecourseLp {
    /// Build the dispatch LP over the devices built in `include`.
    pub fn build(
        catalog: &Catalog,
        grid: &TimeGrid,
        econ: &EconomicParams,
        scenario: &UncertainScenario,
        include: &InvestmentPlan,
        options: RecourseOptions,
    ) -> Result<Self> {
        include.check(catalog)?;
        let n = grid.slots();
        let nominal = &scenario.nominal;
        if nominal.load.len() != n
            || nominal.ndu_available.len() != catalog.renewable.len()
            || nominal.tpg_available.len() != catalog.tidal.len()
            || nominal.ndu_available.iter().chain(&nominal.tpg_available).any(|s| s.len() != n)
        {
            return Err(Error::Shape("scenario does not match the catalog and grid".into()));
        }
        let cfg = &scenario.config;
        let desal = &catalog.desalination;
        let water_penalty = econ.water_shortfall_penalty(desal, grid);

        let mut vars: Vec<RVar> = Vec::new();
        let mut push = |name: String, cost: f64, upper: Option<Affine>, device: Option<DeviceRef>, dual_box: f64| {
            vars.push(RVar { name, cost, upper, device, dual_box });
            vars.len() - 1
        };
        let mut layout = Layout::default();
        let boxes: Vec<(f64, f64)> = (0..n).map(|s| price_box(econ, grid.slot_weight(s))).collect();
        let weight = |s: usize| grid.slot_weight(s);

        for (i, u) in catalog.dispatchable.iter().enumerate() {
            let dev = DeviceRef { tech: Technology::Dispatchable, index: i };
            layout.du.push(include.dispatchable[i].then(|| {
                (0..n)
                    .map(|s| push(format!("p_{}[{s}]", u.id), u.op_cost * weight(s), Some(Affine::constant(u.rated_power)), Some(dev), 0.0))
                    .collect()
            }));
        }
        for (j, u) in catalog.renewable.iter().enumerate() {
            let dev = DeviceRef { tech: Technology::Renewable, index: j };
            layout.ndu.push(include.renewable[j].then(|| {
                (0..n)
                    .map(|s| {
                        let cap = if options.strict_ndu { u.rated_power } else { nominal.ndu_available[j][s] };
                        push(format!("p_{}[{s}]", u.id), 0.0, Some(Affine::constant(cap)), Some(dev), 0.0)
                    })
                    .collect()
            }));
        }
        for (k, u) in catalog.tidal.iter().enumerate() {
            let dev = DeviceRef { tech: Technology::Tidal, index: k };
            layout.tpg.push(include.tidal[k].then(|| {
                (0..n)
                    .map(|s| {
                        let cap = Affine::deviating(nominal.tpg_available[k][s], cfg.beta_tpg, Coord::Tpg(k, s));
                        push(format!("p_{}[{s}]", u.id), u.op_cost * weight(s), Some(cap), Some(dev), boxes[s].1)
                    })
                    .collect()
            }));
        }
        for (l, u) in catalog.storage.iter().enumerate() {
            let dev = DeviceRef { tech: Technology::Storage, index: l };
            let on = include.storage[l];
            let mut series = |prefix: &str, cap: f64| {
                on.then(|| {
                    (0..n)
                        .map(|s| push(format!("{prefix}_{}[{s}]", u.id), 0.0, Some(Affine::constant(cap)), Some(dev), 0.0))
                        .collect::<Vec<_>>()
                })
            };
            layout.ch.push(series("ch", u.rated_power));
            layout.dch.push(series("dch", u.rated_power));
            layout.soc.push(series("soc", u.rated_energy));
        }
        let load_of = |s: usize| Affine::deviating(nominal.load[s], cfg.beta_load, Coord::Load(s));
        layout.water = (0..n)
            .map(|s| push(format!("f[{s}]"), desal.op_cost * weight(s), Some(Affine::constant(desal.rated_capacity)), None, 0.0))
            .collect();
        layout.shed = (0..n)
            .map(|s| push(format!("ls[{s}]"), econ.shed_penalty * weight(s), Some(load_of(s)), None, f64::INFINITY))
            .collect();
        layout.shortfall = (0..grid.day_count())
            .map(|di| {
                let w = grid.day_weight(di % grid.days);
                push(format!("w[{di}]"), water_penalty * w, None, None, 0.0)
            })
            .collect();

        let mut rows = Vec::new();
        for s in 0..n {
            let mut terms = Vec::new();
            for ids in layout.du.iter().chain(&layout.ndu).chain(&layout.tpg).chain(&layout.dch).flatten() {
                terms.push((ids[s], 1.0));
            }
            for ids in layout.ch.iter().flatten() {
                terms.push((ids[s], -1.0));
            }
            terms.push((layout.water[s], -desal.power_per_ton));
            terms.push((layout.shed[s], 1.0));
            rows.push(RRow { name: format!("balance[{s}]"), terms, cmp: Cmp::Eq, rhs: load_of(s), dual_box: (0.0, f64::INFINITY) });
        }
        for (l, u) in catalog.storage.iter().enumerate() {
            let (Some(ch), Some(dch), Some(soc)) = (&layout.ch[l], &layout.dch[l], &layout.soc[l]) else { continue };
            for di in 0..grid.day_count() {
                let slots = grid.day_slots(di);
                for s in slots.clone() {
                    let next = if s + 1 == slots.end { slots.start } else { s + 1 };
                    let name = if next == slots.start { "cyclic_soc" } else { "soc_dynamics" };
                    rows.push(RRow {
                        name: format!("{name}_{}[{s}]", u.id),
                        terms: vec![(soc[next], 1.0), (soc[s], -1.0), (ch[s], -u.efficiency), (dch[s], 1.0 / u.efficiency)],
                        cmp: Cmp::Eq,
                        rhs: Affine::constant(0.0),
                        dual_box: (f64::NEG_INFINITY, f64::INFINITY),
                    });
                }
            }
        }
        for di in 0..grid.day_count() {
            let mut terms: Vec<_> = grid.day_slots(di).map(|s| (layout.water[s], 1.0)).collect();
            terms.push((layout.shortfall[di], 1.0));
            rows.push(RRow {
                name: format!("daily_water[{di}]"),
                terms,
                cmp: Cmp::Ge,
                rhs: Affine::constant(desal.daily_demand),
                dual_box: (f64::NEG_INFINITY, f64::INFINITY),
            });
        }
        let price_cap = boxes.iter().map(|b| b.1).collect();
        Ok(Self {
            vars,
            rows,
            grid: grid.clone(),
            nominal_load: nominal.load.clone(),
            beta_load: cfg.beta_load,
            price_cap,
            layout,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// The dispatch LP under a fixed realization.
    pub fn primal_model(&self, r: &Realization) -> LinearModel {
        let mut m = LinearModel::new("dispatch", ObjSense::Minimize);
        for v in &self.vars {
            let upper = v.upper.as_ref().map_or(f64::INFINITY, |a| a.eval(r).max(0.0));
            m.add_var(v.name.clone(), 0.0, upper, v.cost);
        }
        for row in &self.rows {
            m.add_constraint(row.name.clone(), row.terms.iter().map(|(j, a)| (VarId(*j), *a)).collect(), row.cmp, row.rhs.eval(r));
        }
        m
    }

    /// Optimal dispatch cost and variable values under `r`.
    pub fn solve_primal(&self, backend: &dyn MilpBackend, r: &Realization, options: &SolveOptions) -> Result<(f64, Vec<f64>)> {
        let model = self.primal_model(r);
        backend.solve(&model, &options.strict())?.expect_optimal("dispatch LP")
    }

    /// Append a copy of the recourse for realization `r` to `master`. Device
    /// bounds are tied to the build binaries `x` (canonical order). Returns
    /// the copy's variables; its operation cost is `Σ cost·var`.
    pub fn add_copy(&self, master: &mut LinearModel, x: &[VarId], catalog: &Catalog, r: &Realization, tag: &str) -> Vec<VarId> {
        let offsets = device_offsets(catalog);
        let ids: Vec<VarId> = self
            .vars
            .iter()
            .map(|v| {
                let upper = v.upper.as_ref().map_or(f64::INFINITY, |a| a.eval(r).max(0.0));
                master.add_var(format!("{tag}{}", v.name), 0.0, upper, 0.0)
            })
            .collect();
        for (v, &id) in self.vars.iter().zip(&ids) {
            if let (Some(dev), Some(upper)) = (v.device, &v.upper) {
                let cap = upper.eval(r).max(0.0);
                if cap > 0.0 {
                    let xv = x[offsets[&dev.tech] + dev.index];
                    master.add_constraint(format!("{tag}link_{}", v.name), vec![(id, 1.0), (xv, -cap)], Cmp::Le, 0.0);
                }
            }
        }
        for row in &self.rows {
            master.add_constraint(
                format!("{tag}{}", row.name),
                row.terms.iter().map(|(j, a)| (ids[*j], *a)).collect(),
                row.cmp,
                row.rhs.eval(r),
            );
        }
        ids
    }

    /// Operation cost of a copy as `(var, coefficient)` terms.
    pub fn cost_terms(&self, ids: &[VarId]) -> Vec<(VarId, f64)> {
        self.vars.iter().zip(ids).filter(|(v, _)| v.cost != 0.0).map(|(v, id)| (*id, v.cost)).collect()
    }

    /// Turn LP values (indexed like `self.vars`) into a schedule.
    pub fn schedule(
        &self,
        values: &[f64],
        catalog: &Catalog,
        econ: &EconomicParams,
        scenario: &Scenario,
    ) -> Result<OperationSchedule> {
        let n = self.grid.slots();
        let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x.max(0.0) };
        let series = |ids: &Option<Vec<usize>>| match ids {
            Some(ids) => ids.iter().map(|&j| clean(values[j])).collect(),
            None => vec![0.0; n],
        };
        let mut s = OperationSchedule {
            dispatchable: self.layout.du.iter().map(series).collect(),
            renewable: self.layout.ndu.iter().map(series).collect(),
            tidal: self.layout.tpg.iter().map(series).collect(),
            ess_charge: self.layout.ch.iter().map(series).collect(),
            ess_discharge: self.layout.dch.iter().map(series).collect(),
            soc: self.layout.soc.iter().map(series).collect(),
            water: self.layout.water.iter().map(|&j| clean(values[j])).collect(),
            shed: self.layout.shed.iter().map(|&j| clean(values[j])).collect(),
            water_shortfall: self.layout.shortfall.iter().map(|&j| clean(values[j])).collect(),
            load: scenario.load.clone(),
            cost_inv: 0.0,
            cost_ope: 0.0,
        };
        s.cost_ope = operation_cost(&s, catalog, econ, &self.grid)?;
        Ok(s)
    }

    /// Dualize the LP into a MILP over the deviation flags in `groups`.
    ///
    /// Each flag multiplies one aggregate of duals: the marginal cost of load
    /// for a load flag, which lies in `[0, price cap]` exactly, and the
    /// scarcity value of a tidal bound, whose box is a heuristic multiplied
    /// by `box_scale`. Duals are measured in units of the largest price cap
    /// so that the MILP stays well scaled; see [`DualMilp::unit`].
    pub fn dual_milp(&self, groups: &[BudgetGroup], box_scale: f64) -> Result<DualMilp> {
        let mut m = LinearModel::new("worst_case", ObjSense::Maximize);
        let caps = self.price_cap.iter().chain(self.vars.iter().map(|v| &v.dual_box)).copied().filter(|c| c.is_finite());
        let unit = match caps.fold(0.0, f64::max) {
            c if c > 0.0 => c,
            _ => self.vars.iter().map(|v| v.cost.abs()).fold(0.0, f64::max).max(1.0),
        };
        let allowed: std::collections::HashSet<Coord> = groups.iter().flat_map(|g| g.coords.iter().copied()).collect();
        let is_active = |c: &Coord, d: &Direction| allowed.contains(c) && !is_dominated(*c, *d);
        // Dual terms (and their boxes) multiplied by each deviation flag.
        let mut products: BTreeMap<(Coord, Direction), Vec<(VarId, f64, f64, f64)>> = BTreeMap::new();
        let mut bounded = Vec::new();

        let mut column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                column[j].push((r, a));
            }
        }

        // Row duals.
        let mut lambda = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let (lo, hi) = match row.cmp {
                Cmp::Eq => (f64::NEG_INFINITY, f64::INFINITY),
                Cmp::Ge => (0.0, f64::INFINITY),
                Cmp::Le => (f64::NEG_INFINITY, 0.0),
            };
            let (lo, hi) = (lo.max(row.dual_box.0), hi.min(row.dual_box.1));
            let id = m.add_var(format!("dual_{}", row.name), lo, hi, row.rhs.constant);
            for &(coord, dir, coef) in row.rhs.terms.iter().filter(|(c, d, _)| is_active(c, d)) {
                products.entry((coord, dir)).or_default().push((id, coef, lo, hi));
            }
            lambda.push(id);
        }

        // Bound duals and the dual constraint of every primal column.
        let mut mu_of: Vec<Option<VarId>> = vec![None; self.vars.len()];
        for (j, v) in self.vars.iter().enumerate() {
            if v.upper.as_ref().is_some_and(Affine::is_zero) {
                continue;
            }
            let mut terms: Vec<(VarId, f64)> = column[j].iter().map(|&(r, a)| (lambda[r], a)).collect();
            if let Some(upper) = &v.upper {
                let active: Vec<_> = upper.terms.iter().filter(|(c, d, _)| is_active(c, d)).copied().collect();
                let hi = if active.is_empty() { f64::INFINITY } else { v.dual_box * box_scale / unit };
                let mu = m.add_var(format!("bound_{}", v.name), 0.0, hi, -upper.constant);
                mu_of[j] = Some(mu);
                if hi.is_finite() {
                    bounded.push(BoundedDual { var: mu, lo: 0.0, hi, name: format!("bound_{}", v.name) });
                }
                for (coord, dir, coef) in active {
                    products.entry((coord, dir)).or_default().push((mu, -coef, 0.0, hi));
                }
                terms.push((mu, -1.0));
            }
            m.add_constraint(format!("col_{}", v.name), terms, Cmp::Le, v.cost / unit);
        }

        // One product per flag: z = e·u with e the aggregate it multiplies.
        let mut u_vars: BTreeMap<(Coord, Direction), VarId> = BTreeMap::new();
        for ((coord, dir), terms) in products {
            let (lo, hi) = match coord {
                Coord::Load(s) => {
                    // Load enters the balance row and the shed bound with the
                    // same coefficient, leaving coef·(price − shed dual).
                    let coef = terms.first().map_or(0.0, |t| t.1);
                    let cap = coef * self.price_cap[s] / unit;
                    (cap.min(0.0), cap.max(0.0))
                }
                Coord::Tpg(..) => terms.iter().fold((0.0, 0.0), |(lo, hi), &(_, c, dlo, dhi)| {
                    let ends = [c * dlo, c * dhi];
                    (lo + ends[0].min(ends[1]), hi + ends[0].max(ends[1]))
                }),
            };
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::BigMOverflow { constraint: format!("{coord:?}"), attempts: 0 });
            }
            let name = format!("{coord:?}_{dir:?}");
            let e = m.add_var(format!("agg_{name}"), lo, hi, 0.0);
            let mut row: Vec<_> = terms.iter().map(|&(d, c, _, _)| (d, -c)).collect();
            row.push((e, 1.0));
            m.add_constraint(format!("agg_{name}"), row, Cmp::Eq, 0.0);
            let u = u_var(&mut m, &mut u_vars, coord, dir);
            mccormick(&mut m, e, u, lo, hi, 1.0, &name);
        }

        // Deviation set.
        let coords: std::collections::BTreeSet<Coord> = u_vars.keys().map(|(c, _)| *c).collect();
        for &c in &coords {
            let terms: Vec<_> =
                [Direction::Up, Direction::Down].iter().filter_map(|d| u_vars.get(&(c, *d))).map(|v| (*v, 1.0)).collect();
            if terms.len() == 2 {
                m.add_constraint(format!("exclusive_{c:?}"), terms, Cmp::Le, 1.0);
            }
        }
        for g in groups {
            let terms: Vec<_> = g
                .coords
                .iter()
                .flat_map(|c| [Direction::Up, Direction::Down].map(|d| u_vars.get(&(*c, d))))
                .flatten()
                .map(|v| (*v, 1.0))
                .collect();
            if !terms.is_empty() && terms.len() > g.budget {
                m.add_constraint(format!("budget_{}", g.label), terms, Cmp::Le, g.budget as f64);
            }
        }
        self.add_tidal_symmetry(&mut m, &u_vars, &mu_of, groups);
        Ok(DualMilp { model: m, u_vars: u_vars.into_iter().collect(), bounded, unit })
    }
}

impl RecourseLp {
    /// Tidal units with equal operation cost are interchangeable within a
    /// slot, so only their total capacity matters. Their bound duals are
    /// equal at some optimum, and when they share a budget, deviating a
    /// larger unit dominates deviating a smaller one, which licenses
    /// `u(smaller) <= u(larger)` and removes symmetric branches.
    fn add_tidal_symmetry(
        &self,
        m: &mut LinearModel,
        u_vars: &BTreeMap<(Coord, Direction), VarId>,
        mu_of: &[Option<VarId>],
        groups: &[BudgetGroup],
    ) {
        let group_of: std::collections::HashMap<Coord, usize> =
            groups.iter().enumerate().flat_map(|(g, grp)| grp.coords.iter().map(move |c| (*c, g))).collect();
        for s in 0..self.grid.slots() {
            let mut units: Vec<(usize, f64, f64, VarId, VarId)> = self
                .layout
                .tpg
                .iter()
                .enumerate()
                .filter_map(|(k, ids)| {
                    let j = ids.as_ref()?[s];
                    let v = &self.vars[j];
                    let u = *u_vars.get(&(Coord::Tpg(k, s), Direction::Down))?;
                    Some((k, v.cost, v.upper.as_ref()?.constant, u, mu_of[j]?))
                })
                .collect();
            units.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(&b.0)));
            for pair in units.windows(2) {
                let (big, small) = (pair[0], pair[1]);
                if big.1 != small.1 {
                    continue;
                }
                let tag = format!("{}_{}_{s}", big.0, small.0);
                m.add_constraint(format!("tidal_dual[{tag}]"), vec![(small.4, 1.0), (big.4, -1.0)], Cmp::Eq, 0.0);
                if group_of.get(&Coord::Tpg(big.0, s)) == group_of.get(&Coord::Tpg(small.0, s)) {
                    m.add_constraint(format!("tidal_order[{tag}]"), vec![(small.3, 1.0), (big.3, -1.0)], Cmp::Le, 0.0);
                }
            }
        }
    }
}

fn u_var(m: &mut LinearModel, u_vars: &mut BTreeMap<(Coord, Direction), VarId>, coord: Coord, dir: Direction) -> VarId {
    *u_vars.entry((coord, dir)).or_insert_with(|| m.add_binary(format!("u_{coord:?}_{dir:?}"), 0.0))
}

/// Add `coef·(d·u)` to the objective through `z = d·u` with `d ∈ [lo, hi]`.
fn mccormick(m: &mut LinearModel, d: VarId, u: VarId, lo: f64, hi: f64, coef: f64, name: &str) {
    let z = m.add_var(format!("z_{name}_{}", u.0), lo.min(0.0), hi.max(0.0), coef);
    m.add_constraint(format!("mc1_{name}_{}", u.0), vec![(z, 1.0), (u, -hi)], Cmp::Le, 0.0);
    m.add_constraint(format!("mc2_{name}_{}", u.0), vec![(z, 1.0), (u, -lo)], Cmp::Ge, 0.0);
    m.add_constraint(format!("mc3_{name}_{}", u.0), vec![(z, 1.0), (d, -1.0), (u, -lo)], Cmp::Le, -lo);
    m.add_constraint(format!("mc4_{name}_{}", u.0), vec![(z, 1.0), (d, -1.0), (u, -hi)], Cmp::Ge, -hi);
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDual {
    pub var: VarId,
    pub lo: f64,
    pub hi: f64,
    pub name: String,
}

/// The worst-case MILP and the handles needed to read it back.
#[derive(Debug, Clone)]
pub struct DualMilp {
    pub model: LinearModel,
    pub u_vars: Vec<((Coord, Direction), VarId)>,
    pub bounded: Vec<BoundedDual>,
    /// Cost of one dual unit; the dispatch cost is `unit` times the MILP objective.
    pub unit: f64,
}

impl DualMilp {
    pub fn realization(&self, values: &[f64], grid: &TimeGrid, tpg_units: usize) -> Realization {
        let mut r = Realization::nominal(grid, tpg_units);
        for ((coord, dir), id) in &self.u_vars {
            if values[id.0] > 0.5 {
                r.set(*coord, Some(*dir));
            }
        }
        r
    }

    /// Bounded duals sitting on their box at `values`.
    pub fn saturated(&self, values: &[f64]) -> Vec<&BoundedDual> {
        self.bounded
            .iter()
            .filter(|b| {
                let v = values[b.var.0];
                (b.hi.is_finite() && b.hi > 0.0 && v >= b.hi * (1.0 - 1e-6))
                    || (b.lo.is_finite() && b.lo < 0.0 && v <= b.lo * (1.0 - 1e-6))
            })
            .collect()
    }
}

/// Position of the first device of each technology in canonical order.
pub fn device_offsets(catalog: &Catalog) -> BTreeMap<Technology, usize> {
    let mut offsets = BTreeMap::new();
    let mut at = 0;
    for tech in Technology::ALL {
        offsets.insert(tech, at);
        at += catalog.count(tech);
    }
    offsets
}
