//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omplan_core::dpm::solve_dpm;
use omplan_core::evaluate::{dispatch, shed_under_worst, sweep, SweepJob};
use omplan_core::model::{investment_cost, CostBreakdown};
use omplan_core::robust::{ccg_solve, CcgStatus, WorstCaseMethod};
use omplan_core::solver::{select_backend, MilpBackend};
use omplan_core::uncertainty::Realization;
use omplan_core::{Error, Result};

use crate::config::{load_run_config, RunBundle};
use crate::output::{
    read_plan, write_json, write_schedule, write_sweep, write_trace, CostsFile, Manifest, PlanFile, RealizationFile,
    SolverInfo,
};

#[derive(Debug, Parser)]
#[command(name = "omplan", version, about = "Capacity planning for islanded offshore microgrids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan against the forecast alone.
    PlanDpm(RunArgs),
    /// Plan against the worst case of the uncertainty set.
    PlanRpm(RunArgs),
    /// Dispatch a fixed plan under its worst case, or the forecast with --nominal.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// plan.json from an earlier run.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        nominal: bool,
    },
    /// Run one job over a grid of β, γ and tidal delay values.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = JobKind::Rpm)]
        job: JobKind,
        /// Plan to audit with --job audit.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Overrides the config's sweep.beta.
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta_t: Option<Vec<i32>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JobKind {
    Dpm,
    Rpm,
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dual,
    Enum,
}

impl From<MethodArg> for WorstCaseMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dual => WorstCaseMethod::DualMilp,
            MethodArg::Enum => WorstCaseMethod::Enumerate,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Solver backend; falls back to OM_SOLVER, then HiGHS.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for enumeration and sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    /// Load the config and apply command-line overrides.
    fn bundle(&self) -> Result<RunBundle> {
        let mut b = load_run_config(&self.config)?;
        if let Some(name) = &self.backend {
            b.config.solver.backend = Some(name.clone());
        }
        if let Some(m) = self.method {
            b.config.ccg.method = m.into();
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::invalid("--eps", format!("must be > 0 (got {eps})")));
            }
            b.config.ccg.eps = eps;
        }
        if let Some(n) = self.max_iter {
            if n == 0 {
                return Err(Error::invalid("--max-iter", "must be at least 1"));
            }
            b.config.ccg.max_iter = n;
        }
        if let Some(seed) = self.seed {
            b.config.solver.seed = seed;
        }
        b.rebuild()?;
        Ok(b)
    }
}

struct Session {
    bundle: RunBundle,
    backend: std::sync::Arc<dyn MilpBackend>,
    out: PathBuf,
    command: &'static str,
    outputs: Vec<String>,
    started: Instant,
}

impl Session {
    fn open(args: &RunArgs, command: &'static str) -> Result<Self> {
        let started = Instant::now();
        let bundle = args.bundle()?;
        let backend = select_backend(bundle.config.solver.backend.as_deref())?;
        std::fs::create_dir_all(&args.out)?;
        Ok(Self { bundle, backend, out: args.out.clone(), command, outputs: Vec::new(), started })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(mut self) -> Result<()> {
        let path = self.path("manifest.json");
        let manifest = Manifest {
            tool: "omplan".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            inputs: self.bundle.input_hashes.clone(),
            config: serde_json::to_value(&self.bundle.config).map_err(|e| Error::invalid("config", e.to_string()))?,
            solver: SolverInfo { name: self.backend.name().into(), version: self.backend.version() },
            threads: rayon::current_num_threads(),
            outputs: self.outputs.clone(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        write_json(&path, &manifest)
    }
}

pub fn plan_dpm(args: &RunArgs) -> Result<()> {
    let mut s = Session::open(args, "plan-dpm")?;
    let inst = &s.bundle.instance.clone();
    let out = solve_dpm(inst, s.backend.as_ref())?;
    write_json(&s.path("plan.json"), &PlanFile::new(&out.plan, &inst.catalog))?;
    write_schedule(&s.path("schedule.csv"), &out.schedule, &inst.catalog, &inst.grid)?;
    write_json(&s.path("costs.json"), &CostsFile::new(out.costs, &out.schedule, &inst.grid))?;
    s.finish()
}

pub fn plan_rpm(args: &RunArgs) -> Result<()> {
    let mut s = Session::open(args, "plan-rpm")?;
    let inst = &s.bundle.instance.clone();
    let out = ccg_solve(inst, &s.bundle.config.ccg, s.backend.as_ref())?;
    if out.state.status != CcgStatus::Converged {
        log::warn!("stopped after {} iterations with gap {:.3e}", out.state.iteration, out.state.gap());
    }
    write_json(&s.path("plan.json"), &PlanFile::new(&out.plan, &inst.catalog))?;
    write_schedule(&s.path("schedule.csv"), &out.schedule, &inst.catalog, &inst.grid)?;
    write_json(&s.path("costs.json"), &CostsFile::new(out.costs, &out.schedule, &inst.grid))?;
    write_trace(&s.path("trace.csv"), &out.state.trace)?;
    write_json(
        &s.path("realization.json"),
        &RealizationFile::new(&out.realization, &out.scenario, &inst.catalog, &inst.grid),
    )?;
    s.finish()
}

pub fn evaluate(args: &RunArgs, plan_path: &Path, nominal: bool) -> Result<()> {
    let mut s = Session::open(args, "evaluate")?;
    let inst = &s.bundle.instance.clone();
    let plan = read_plan(plan_path, &inst.catalog)?;
    let (realization, scenario, schedule) = if nominal {
        let r = Realization::nominal(&inst.grid, inst.catalog.tidal.len());
        let d = dispatch(inst, &plan, &r, s.backend.as_ref())?;
        (r, d.scenario, d.schedule)
    } else {
        let w = shed_under_worst(inst, &plan, s.bundle.config.ccg.method, s.backend.as_ref())?;
        (w.realization, w.scenario, w.schedule)
    };
    let inv = investment_cost(&inst.catalog, &plan, &inst.grid, &inst.econ)?;
    let costs = CostBreakdown::new(inv, schedule.cost_ope);
    write_json(&s.path("plan.json"), &PlanFile::new(&plan, &inst.catalog))?;
    write_schedule(&s.path("schedule.csv"), &schedule, &inst.catalog, &inst.grid)?;
    write_json(&s.path("costs.json"), &CostsFile::new(costs, &schedule, &inst.grid))?;
    write_json(&s.path("realization.json"), &RealizationFile::new(&realization, &scenario, &inst.catalog, &inst.grid))?;
    s.finish()
}

pub fn run_sweep(
    args: &RunArgs,
    job: JobKind,
    plan_path: Option<&Path>,
    axes: (Option<Vec<f64>>, Option<Vec<f64>>, Option<Vec<i32>>),
) -> Result<()> {
    let mut s = Session::open(args, "sweep")?;
    let (beta, gamma, delta_t) = axes;
    let config = &mut s.bundle.config;
    if let Some(v) = beta {
        config.sweep.beta = v;
    }
    if let Some(v) = gamma {
        config.sweep.gamma = v;
    }
    if let Some(v) = delta_t {
        config.sweep.delta_t = v;
    }
    for (axis, values) in [("--beta", &config.sweep.beta), ("--gamma", &config.sweep.gamma)] {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(axis, format!("values must lie in [0, 1] (got {v})")));
        }
    }
    let inst = s.bundle.instance.clone();
    let job = match job {
        JobKind::Dpm => SweepJob::Deterministic,
        JobKind::Rpm => SweepJob::Robust(s.bundle.config.ccg.clone()),
        JobKind::Audit => {
            let path = plan_path.ok_or_else(|| Error::invalid("--plan", "required with --job audit"))?;
            SweepJob::Audit(read_plan(path, &inst.catalog)?, s.bundle.config.ccg.method)
        }
    };
    let rows = sweep(&inst, &s.bundle.config.sweep, &job, s.backend.as_ref());
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep cells failed", rows.len());
    }
    write_sweep(&s.path("sweep.csv"), &rows)?;
    s.finish()
}

/// Run a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let run = match &cli.command {
        Command::PlanDpm(r) | Command::PlanRpm(r) => r,
        Command::Evaluate { run, .. } | Command::Sweep { run, .. } => run,
    };
    if let Some(n) = run.threads {
        if n == 0 {
            return Err(Error::invalid("--threads", "must be at least 1"));
        }
        // A second call in the same process keeps the first pool.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already configured");
        }
    }
    match cli.command {
        Command::PlanDpm(r) => plan_dpm(&r),
        Command::PlanRpm(r) => plan_rpm(&r),
        Command::Evaluate { run, plan, nominal } => evaluate(&run, &plan, nominal),
        Command::Sweep { run, job, plan, beta, gamma, delta_t } => {
            run_sweep(&run, job, plan.as_deref(), (beta, gamma, delta_t))
        }
    }
}
