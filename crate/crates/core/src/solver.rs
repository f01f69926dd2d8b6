//! Solver-neutral linear model plus the MILP backends that solve it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

/// A linear or mixed-integer model: bounded variables, linear rows, linear
/// objective. Variables and rows keep their insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub name: String,
    pub sense: ObjSense,
    pub objective_offset: f64,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearModel {
    pub fn new(name: impl Into<String>, sense: ObjSense) -> Self {
        Self { name: name.into(), sense, objective_offset: 0.0, vars: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.push_var(name.into(), lower, upper, VarKind::Continuous, cost)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.push_var(name.into(), 0.0, 1.0, VarKind::Integer, cost)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, kind: VarKind, cost: f64) -> VarId {
        debug_assert!(lower <= upper, "{name}: lower {lower} above upper {upper}");
        self.vars.push(Variable { name, lower, upper, kind, cost });
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, cmp: Cmp, rhs: f64) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.vars.len()));
        self.constraints.push(Constraint { name: name.into(), terms, cmp, rhs });
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Integer)
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(values).map(|(v, x)| v.cost * x).sum::<f64>()
    }

    /// Largest absolute bound, row or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind == VarKind::Integer {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
            let r = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Write the model in free MPS format. Output depends only on the model.
    pub fn to_mps(&self) -> String {
        write_mps(self)
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_mps())?;
        Ok(())
    }

    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        read_mps(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Seconds.
    pub time_limit: Option<f64>,
    pub rel_gap: f64,
    pub seed: u64,
    /// Primal feasibility tolerance.
    pub feasibility_tol: f64,
    /// Integrality tolerance for MIPs.
    pub integrality_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { time_limit: None, rel_gap: 1e-6, seed: 0, feasibility_tol: 1e-6, integrality_tol: 1e-6 }
    }
}

impl SolveOptions {
    /// Tolerances tight enough for big-M products with large coefficients.
    pub fn strict(&self) -> Self {
        Self { feasibility_tol: 1e-9, integrality_tol: 1e-9, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    InfeasibleOrUnbounded,
    /// A time or iteration limit stopped the solve.
    Limit,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Best proven bound on the objective (equals the objective for LPs).
    pub bound: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub wall_time: Duration,
}

impl SolveOutcome {
    /// Values of an optimal solve, or a [`Error::Solver`] naming `context`.
    pub fn expect_optimal(self, context: &str) -> Result<(f64, Vec<f64>)> {
        match (self.status, self.objective, self.values) {
            (SolveStatus::Optimal, Some(obj), Some(values)) => Ok((obj, values)),
            (status, ..) => Err(Error::Solver { status, context: context.to_string() }),
        }
    }
}

pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn version(&self) -> String;
    fn solve(&self, model: &LinearModel, options: &SolveOptions) -> Result<SolveOutcome>;
}

/// Set to any value to let the backend print its own log.
pub const SOLVER_LOG_ENV: &str = "OM_SOLVER_LOG";
pub const BACKEND_ENV: &str = "OM_SOLVER";

pub fn available_backends() -> &'static [&'static str] {
    &["highs"]
}

pub fn backend_by_name(name: &str) -> Result<Arc<dyn MilpBackend>> {
    match name.to_ascii_lowercase().as_str() {
        "highs" => Ok(Arc::new(HighsBackend)),
        other => Err(Error::BackendUnavailable(other.to_string())),
    }
}

/// The backend named by `name`, else by `OM_SOLVER`, else HiGHS.
pub fn select_backend(name: Option<&str>) -> Result<Arc<dyn MilpBackend>> {
    match name {
        Some(n) => backend_by_name(n),
        None => match std::env::var(BACKEND_ENV) {
            Ok(n) if !n.trim().is_empty() => backend_by_name(n.trim()),
            _ => backend_by_name("highs"),
        },
    }
}

pub fn default_backend() -> Arc<dyn MilpBackend> {
    Arc::new(HighsBackend)
}

/// Matrix entries at or below this magnitude are treated as zero.
const SMALL_MATRIX_VALUE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

enum OptionValue {
    Int(i32),
    Float(f64),
}

impl MilpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn version(&self) -> String {
        // SAFETY: returns a pointer to a static NUL-terminated string.
        let raw = unsafe { std::ffi::CStr::from_ptr(highs_sys::Highs_version()) };
        raw.to_string_lossy().into_owned()
    }

    fn solve(&self, model: &LinearModel, options: &SolveOptions) -> Result<SolveOutcome> {
        let start = Instant::now();
        if model.vars.is_empty() {
            let feasible = model.constraints.iter().all(|c| match c.cmp {
                Cmp::Le => 0.0 <= c.rhs,
                Cmp::Ge => 0.0 >= c.rhs,
                Cmp::Eq => c.rhs == 0.0,
            });
            let objective = feasible.then_some(model.objective_offset);
            return Ok(SolveOutcome {
                status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
                objective,
                bound: objective,
                values: feasible.then(Vec::new),
                wall_time: start.elapsed(),
            });
        }

        let mut problem = RowProblem::default();
        let cols: Vec<_> = model
            .vars
            .iter()
            .map(|v| problem.add_column_with_integrality(v.cost, v.lower..=v.upper, v.kind == VarKind::Integer))
            .collect();
        for c in &model.constraints {
            // HiGHS drops entries this small itself and warns about it.
            let row: Vec<_> =
                c.terms.iter().filter(|(_, a)| a.abs() > SMALL_MATRIX_VALUE).map(|(v, a)| (cols[v.0], *a)).collect();
            match c.cmp {
                Cmp::Le => problem.add_row(..=c.rhs, row),
                Cmp::Ge => problem.add_row(c.rhs.., row),
                Cmp::Eq => problem.add_row(c.rhs..=c.rhs, row),
            }
        }
        let sense = match model.sense {
            ObjSense::Minimize => Sense::Minimise,
            ObjSense::Maximize => Sense::Maximise,
        };
        let fail = |what: &str| Error::Solver { status: SolveStatus::Failed, context: format!("{}: {what}", model.name) };
        let mut highs = problem.try_optimise(sense).map_err(|_| fail("model rejected"))?;
        if std::env::var_os(SOLVER_LOG_ENV).is_none() {
            highs.make_quiet();
        } else {
            let _ = highs.try_set_option("output_flag", true);
            let _ = highs.try_set_option("log_to_console", true);
        }
        let seed = (options.seed % i32::MAX as u64) as i32;
        let mut set = |name: &str, value: OptionValue| {
            let r = match value {
                OptionValue::Int(v) => highs.try_set_option(name, v),
                OptionValue::Float(v) => highs.try_set_option(name, v),
            };
            r.map_err(|_| fail(&format!("option {name} rejected")))
        };
        set("random_seed", OptionValue::Int(seed))?;
        set("primal_feasibility_tolerance", OptionValue::Float(options.feasibility_tol))?;
        set("dual_feasibility_tolerance", OptionValue::Float(options.feasibility_tol))?;
        if model.is_mip() {
            set("mip_rel_gap", OptionValue::Float(options.rel_gap))?;
            set("mip_feasibility_tolerance", OptionValue::Float(options.integrality_tol))?;
        }
        if let Some(limit) = options.time_limit {
            set("time_limit", OptionValue::Float(limit))?;
        }
        let solved = highs.try_solve().map_err(|_| fail("solve failed"))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => SolveStatus::InfeasibleOrUnbounded,
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => SolveStatus::Limit,
            other => {
                log::warn!("{}: HiGHS model status {other:?}", model.name);
                SolveStatus::Failed
            }
        };
        let has_primal = matches!(status, SolveStatus::Optimal)
            || (status == SolveStatus::Limit
                && solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible);
        let (objective, values) = if has_primal {
            let values = solved.get_solution().columns().to_vec();
            (Some(model.objective(&values)), Some(values))
        } else {
            (None, None)
        };
        let bound = if !has_primal {
            None
        } else if model.is_mip() {
            solved.double_info_value(c"mip_dual_bound").ok().map(|b| b + model.objective_offset)
        } else {
            objective
        };
        Ok(SolveOutcome { status, objective, bound, values, wall_time: start.elapsed() })
    }
}

fn mps_name(raw: &str) -> String {
    let cleaned: String =
        raw.chars().map(|c| if c.is_ascii_graphic() && c != '$' { c } else { '_' }).collect();
    if cleaned.is_empty() {
        "_".into()
    } else {
        cleaned
    }
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>, reserved: &[&str]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = reserved.iter().map(|r| (r.to_string(), 0)).collect();
    names
        .enumerate()
        .map(|(i, n)| {
            let base = mps_name(n);
            if seen.contains_key(&base) {
                let alt = format!("{base}~{i}");
                seen.insert(alt.clone(), i);
                alt
            } else {
                seen.insert(base.clone(), i);
                base
            }
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn write_mps(model: &LinearModel) -> String {
    const OBJ: &str = "__obj__";
    let rows = unique_names(model.constraints.iter().map(|c| c.name.as_str()), &[OBJ]);
    let cols = unique_names(model.vars.iter().map(|v| v.name.as_str()), &[]);
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.vars.len()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            by_col[v.0].push((r, a));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", mps_name(&model.name));
    if model.sense == ObjSense::Maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N {OBJ}");
    for (c, name) in model.constraints.iter().zip(&rows) {
        let t = match c.cmp {
            Cmp::Le => 'L',
            Cmp::Ge => 'G',
            Cmp::Eq => 'E',
        };
        let _ = writeln!(out, " {t} {name}");
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    for (j, v) in model.vars.iter().enumerate() {
        let is_int = v.kind == VarKind::Integer;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER 'MARKER' {tag}");
            in_int = is_int;
        }
        let _ = writeln!(out, "    {} {OBJ} {}", cols[j], num(v.cost));
        for &(r, a) in &by_col[j] {
            let _ = writeln!(out, "    {} {} {}", cols[j], rows[r], num(a));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER 'MARKER' 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    if model.objective_offset != 0.0 {
        let _ = writeln!(out, "    RHS {OBJ} {}", num(-model.objective_offset));
    }
    for (c, name) in model.constraints.iter().zip(&rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {name} {}", num(c.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for (v, name) in model.vars.iter().zip(&cols) {
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            let _ = writeln!(out, " FX BND {name} {}", num(lo));
            continue;
        }
        if v.kind == VarKind::Integer && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " BV BND {name}");
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {name}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {name}");
                let _ = writeln!(out, " UP BND {name} {}", num(hi));
            }
            (true, fin_hi) => {
                let _ = writeln!(out, " LO BND {name} {}", num(lo));
                if fin_hi {
                    let _ = writeln!(out, " UP BND {name} {}", num(hi));
                } else {
                    let _ = writeln!(out, " PL BND {name}");
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    Head,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

/// Parse free-format MPS (no RANGES, no quadratic sections).
fn read_mps(text: &str) -> Result<LinearModel> {
    let mut model = LinearModel::new("", ObjSense::Minimize);
    let mut section = Section::Head;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;
    let mut bounded = vec![false; 0];

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| Error::Mps { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).unwrap_or(&"").to_string();
                    Section::Head
                }
                "OBJSENSE" => {
                    if let Some(s) = fields.get(1) {
                        model.sense = parse_sense(s).ok_or_else(|| err(format!("unknown sense {s}")))?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(format!("unsupported section {other}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => {
                model.sense = parse_sense(fields[0]).ok_or_else(|| err(format!("unknown sense {}", fields[0])))?;
            }
            Section::Rows => {
                let [kind, name] = fields[..] else { return Err(err("expected `type name`".into())) };
                let cmp = match kind {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Cmp::Le,
                    "G" => Cmp::Ge,
                    "E" => Cmp::Eq,
                    other => return Err(err(format!("unknown row type {other}"))),
                };
                row_index.insert(name.to_string(), model.constraints.len());
                model.constraints.push(Constraint { name: name.to_string(), terms: Vec::new(), cmp, rhs: 0.0 });
            }
            Section::Columns => {
                if fields.get(1) == Some(&"'MARKER'") {
                    match fields.get(2) {
                        Some(&"'INTORG'") => in_int = true,
                        Some(&"'INTEND'") => in_int = false,
                        _ => return Err(err("malformed marker".into())),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected `column row value [row value]`".into()));
                }
                let col = match col_index.get(fields[0]) {
                    Some(&j) => j,
                    None => {
                        let (lo, hi, kind) = if in_int {
                            (0.0, f64::INFINITY, VarKind::Integer)
                        } else {
                            (0.0, f64::INFINITY, VarKind::Continuous)
                        };
                        model.vars.push(Variable { name: fields[0].to_string(), lower: lo, upper: hi, kind, cost: 0.0 });
                        bounded.push(false);
                        col_index.insert(fields[0].to_string(), model.vars.len() - 1);
                        model.vars.len() - 1
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = parse_num(pair[1]).ok_or_else(|| err(format!("bad number {}", pair[1])))?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        model.vars[col].cost = value;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        model.constraints[r].terms.push((VarId(col), value));
                    }
                }
            }
            Section::Rhs => {
                let pairs = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err("expected `row value` pairs".into()));
                    }
                    let value = parse_num(pair[1]).ok_or_else(|| err(format!("bad number {}", pair[1])))?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        model.objective_offset = -value;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        model.constraints[r].rhs = value;
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err("expected `type bound column [value]`".into()));
                }
                let j = *col_index.get(fields[2]).ok_or_else(|| err(format!("unknown column {}", fields[2])))?;
                let value = match fields.get(3) {
                    Some(s) => Some(parse_num(s).ok_or_else(|| err(format!("bad number {s}")))?),
                    None => None,
                };
                let need = || value.ok_or_else(|| err(format!("{} bound needs a value", fields[0])));
                let v = &mut model.vars[j];
                bounded[j] = true;
                match fields[0] {
                    "UP" => {
                        v.upper = need()?;
                        if v.upper < 0.0 && v.lower == 0.0 {
                            v.lower = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => v.lower = need()?,
                    "FX" => {
                        v.lower = need()?;
                        v.upper = v.lower;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "BV" => {
                        v.kind = VarKind::Integer;
                        v.lower = 0.0;
                        v.upper = 1.0;
                    }
                    "UI" => {
                        v.kind = VarKind::Integer;
                        v.upper = need()?;
                    }
                    "LI" => {
                        v.kind = VarKind::Integer;
                        v.lower = need()?;
                    }
                    other => return Err(err(format!("unsupported bound type {other}"))),
                }
            }
            Section::Head => return Err(err("data before a section header".into())),
            Section::Done => return Err(err("data after ENDATA".into())),
        }
    }
    if section != Section::Done {
        return Err(Error::Mps { line: text.lines().count(), message: "missing ENDATA".into() });
    }
    Ok(model)
}

fn parse_sense(s: &str) -> Option<ObjSense> {
    match s {
        "MIN" | "MINIMIZE" => Some(ObjSense::Minimize),
        "MAX" | "MAXIMIZE" => Some(ObjSense::Maximize),
        _ => None,
    }
}

fn parse_num(s: &str) -> Option<f64> {
    match s {
        "Infinity" | "inf" | "+inf" => Some(f64::INFINITY),
        "-Infinity" | "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(model: &LinearModel) -> SolveOutcome {
        HighsBackend.solve(model, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn bounded_max() {
        let mut m = LinearModel::new("max", ObjSense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        m.add_constraint("cap", vec![(x, 1.0)], Cmp::Le, 3.0);
        let out = solve(&m);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.values.unwrap()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        let mut m = LinearModel::new("inf", ObjSense::Minimize);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        m.add_constraint("lo", vec![(x, 1.0)], Cmp::Ge, 1.0);
        m.add_constraint("hi", vec![(x, 1.0)], Cmp::Le, 0.0);
        let out = solve(&m);
        assert!(matches!(out.status, SolveStatus::Infeasible | SolveStatus::InfeasibleOrUnbounded));
        assert!(out.values.is_none());
    }

    #[test]
    fn knapsack_picks_higher_value() {
        let mut m = LinearModel::new("knap", ObjSense::Maximize);
        let a = m.add_binary("a", 5.0);
        let b = m.add_binary("b", 7.0);
        m.add_constraint("cap", vec![(a, 3.0), (b, 4.0)], Cmp::Le, 5.0);
        let out = solve(&m);
        let v = out.values.unwrap();
        assert_eq!((v[0].round(), v[1].round()), (0.0, 1.0));
        assert!((out.objective.unwrap() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_reported() {
        let mut m = LinearModel::new("unb", ObjSense::Maximize);
        m.add_var("x", 0.0, f64::INFINITY, 1.0);
        let out = solve(&m);
        assert!(matches!(out.status, SolveStatus::Unbounded | SolveStatus::InfeasibleOrUnbounded));
    }

    #[test]
    fn unknown_backend() {
        assert!(matches!(backend_by_name("gurobi"), Err(Error::BackendUnavailable(_))));
        assert_eq!(backend_by_name("HiGHS").unwrap().name(), "highs");
    }

    fn mixed_model() -> LinearModel {
        let mut m = LinearModel::new("mixed model", ObjSense::Minimize);
        m.objective_offset = 2.5;
        let x = m.add_var("x", f64::NEG_INFINITY, 4.0, -1.0);
        let y = m.add_binary("y", 3.0);
        let z = m.add_var("z", -2.0, f64::INFINITY, 0.5);
        let w = m.add_var("w", 1.5, 1.5, 1.0);
        m.add_constraint("r", vec![(x, 1.0), (y, -10.0)], Cmp::Le, 0.1);
        m.add_constraint("r", vec![(x, 1.0), (z, 1.0)], Cmp::Ge, -1.0);
        m.add_constraint("e q", vec![(z, 2.0), (w, 1.0)], Cmp::Eq, 1.0 / 3.0);
        m
    }

    #[test]
    fn mps_roundtrip_preserves_model() {
        let m = mixed_model();
        let text = m.to_mps();
        assert_eq!(text, mixed_model().to_mps());
        let back = read_mps(&text).unwrap();
        assert_eq!(back.sense, m.sense);
        assert_eq!(back.objective_offset, m.objective_offset);
        assert_eq!(back.vars.len(), 4);
        for (a, b) in m.vars.iter().zip(&back.vars) {
            assert_eq!((a.lower, a.upper, a.kind, a.cost), (b.lower, b.upper, b.kind, b.cost));
        }
        for (a, b) in m.constraints.iter().zip(&back.constraints) {
            assert_eq!((a.cmp, a.rhs, &a.terms), (b.cmp, b.rhs, &b.terms));
        }
        let (o1, _) = solve(&m).expect_optimal("original").unwrap();
        let (o2, _) = solve(&back).expect_optimal("reimported").unwrap();
        assert!((o1 - o2).abs() <= 1e-6 * o1.abs().max(1.0));
    }

    #[test]
    fn mps_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mps");
        let m = mixed_model();
        m.export(&path).unwrap();
        let back = LinearModel::import(&path).unwrap();
        assert_eq!(back.to_mps(), std::fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn mps_reader_reports_line() {
        let err = read_mps("NAME x\nROWS\n N obj\n Q bad\nENDATA\n").unwrap_err();
        assert!(matches!(err, Error::Mps { line: 4, .. }));
    }

    #[test]
    fn empty_model_solves() {
        let m = LinearModel::new("empty", ObjSense::Minimize);
        let out = solve(&m);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective, Some(0.0));
    }
}
