//! Implementations of the `pmcgd` subcommands. Each writes its report to
//! the given writer and returns the process exit code.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use pmcgd_core::descent::{
    feasibility_search, DescentConfig, Method, Restriction, RunResult, Status,
};
use pmcgd_core::gradient::{finite_difference, gradient_via_derived, Objective, PmcObjective};
use pmcgd_core::linsolve::{Backend, SolverOptions};
use pmcgd_core::textio::{serialize_model, serialize_wfa, wfa_to_dot, MeasureKind, PropertyQuery};
use pmcgd_core::{generate_synthetic, make_pmc_objective, preprocess, ParameterSet, Pmc};

use crate::inputs::{
    load_model, load_property, load_region, parse_generator, parse_point, read_raw_model,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_EXHAUSTED: u8 = 2;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model, printing its size.
    Check(CheckArgs),
    /// Evaluate a measure at a point.
    Eval(EvalArgs),
    /// Partial derivatives of a measure at a point.
    Gradient(GradientArgs),
    /// Write the derived weighted automaton for one parameter.
    Derive(DeriveArgs),
    /// Search the region for a point satisfying the property.
    Solve(SolveArgs),
    /// Run a benchmark manifest.
    Bench(crate::bench::BenchArgs),
    /// Write a seeded synthetic model.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub model: PathBuf,
    /// Also check graph preservation over this region.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Linear solver backend.
    #[arg(long, default_value = "gmres")]
    pub backend: Backend,
    /// Residual tolerance of each linear solve.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            backend: self.backend,
            tol: self.tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    /// Parameter values, e.g. `p=0.5,q=0.25`.
    #[arg(long, required = true)]
    pub point: Vec<String>,
    /// Property (inline or a `.prop` file); only its measure is used.
    #[arg(long, default_value = "ER >= 0")]
    pub property: String,
    #[arg(long)]
    pub region: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Via {
    Eqsys,
    Derived,
    Fd,
}

#[derive(Debug, Args)]
pub struct GradientArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Parameters to differentiate by (default: all).
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
    #[arg(long, value_enum, default_value = "eqsys")]
    pub via: Via,
    /// Step of the central difference.
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub param: String,
    /// Output prefix; writes `<out>.pmc` and `<out>.dot`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub model: PathBuf,
    /// Property such as `P >= 0.9` (inline or a `.prop` file).
    #[arg(long)]
    pub property: String,
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Update method; without it, momentum with sign updates is used.
    #[arg(long)]
    pub method: Option<Method>,
    /// Use gradient signs (plain, momentum and nag).
    #[arg(long)]
    pub sign: bool,
    #[arg(long, default_value = "projection")]
    pub restriction: Restriction,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub mu0: f64,
    /// Literal logistic gradient factor instead of the exact chain rule.
    #[arg(long)]
    pub logistic_compat: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

impl SolveArgs {
    pub fn config(&self, query: &PropertyQuery) -> Result<DescentConfig> {
        let (method, sign) = match self.method {
            None => (Method::Momentum, true),
            Some(m) => (m, self.sign),
        };
        let time_limit = match self.time_limit {
            Some(t) if !(t > 0.0 && t.is_finite()) => bail!("time limit must be positive"),
            t => t.map(Duration::from_secs_f64),
        };
        let cfg = DescentConfig {
            method,
            sign,
            restriction: self.restriction,
            lr: self.lr,
            gamma: self.gamma,
            beta: self.beta,
            batch_size: self.batch_size,
            seed: self.seed,
            max_iterations: self.max_iterations,
            time_limit,
            mu0: self.mu0,
            mu_floor: self.mu0.min(1e-6),
            logistic_compat: self.logistic_compat,
            ..DescentConfig::for_query(query)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator settings, e.g. `states=1000 params=100 seed=1`.
    pub spec: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the default region next to the model.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

fn named(params: &ParameterSet, values: &[f64]) -> BTreeMap<String, f64> {
    params
        .names()
        .iter()
        .cloned()
        .zip(values.iter().copied())
        .collect()
}

fn measure_name(kind: MeasureKind) -> &'static str {
    match kind {
        MeasureKind::Reachability => "P",
        MeasureKind::ExpectedReward => "ER",
    }
}

fn plural(n: usize, word: &str) -> String {
    format!("{n} {word}{}", if n == 1 { "" } else { "s" })
}

pub fn check(args: &CheckArgs, out: &mut dyn Write) -> Result<u8> {
    let raw = read_raw_model(&args.model)?;
    let pmc =
        preprocess(&raw, &raw.targets).with_context(|| format!("{}", args.model.display()))?;
    writeln!(
        out,
        "{}, {}, {}",
        plural(pmc.num_states(), "state"),
        plural(pmc.num_transitions(), "transition"),
        plural(pmc.params().len(), "parameter")
    )?;
    if let Err(e) = pmc.ensure_almost_sure_target() {
        writeln!(out, "warning: {e} (reachability queries are still allowed)")?;
    }
    if let Some(path) = &args.region {
        let region = load_region(Some(path), pmc.params())?;
        region
            .check_graph_preserving(&pmc)
            .context("region is not graph-preserving")?;
        writeln!(out, "region is graph-preserving")?;
    }
    Ok(EXIT_OK)
}

struct Evaluation {
    pmc: Pmc,
    query: PropertyQuery,
    obj: PmcObjective,
    u: Vec<f64>,
}

fn prepare_eval(args: &EvalArgs) -> Result<Evaluation> {
    let query = load_property(&args.property)?;
    let pmc = load_model(&args.model, query.kind)?;
    let region = load_region(args.region.as_deref(), pmc.params())?;
    let u = parse_point(&args.point, pmc.params())?;
    region.check_contains(&u)?;
    // Evaluate the measure itself, regardless of the comparator.
    let measure = PropertyQuery {
        cmp: pmcgd_core::Comparator::Ge,
        ..query
    };
    let obj = make_pmc_objective(&pmc, &measure, &region, args.solver.options())?;
    Ok(Evaluation { pmc, query, obj, u })
}

#[derive(Serialize)]
struct EvalReport<'a> {
    measure: &'a str,
    point: BTreeMap<String, f64>,
    value: f64,
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<u8> {
    let mut ev = prepare_eval(args)?;
    let value = ev.obj.raw_value(&ev.u)?;
    let report = EvalReport {
        measure: measure_name(ev.query.kind),
        point: named(ev.pmc.params(), &ev.u),
        value,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GradientReport<'a> {
    measure: &'a str,
    via: &'a str,
    point: BTreeMap<String, f64>,
    value: f64,
    gradient: BTreeMap<String, f64>,
}

pub fn gradient(args: &GradientArgs, out: &mut dyn Write) -> Result<u8> {
    let mut ev = prepare_eval(&args.eval)?;
    let params = ev.pmc.params().clone();
    let subset: Vec<usize> = if args.params.is_empty() {
        (0..params.len()).collect()
    } else {
        args.params
            .iter()
            .map(|p| params.lookup(p.trim()))
            .collect::<Result<_, _>>()?
    };
    let value = ev.obj.raw_value(&ev.u)?;
    let grads: Vec<f64> = match args.via {
        Via::Eqsys => ev.obj.raw_gradient(&ev.u, &subset)?,
        Via::Derived => {
            let model = ev.obj.pmc().clone();
            let region = ev.obj.region().clone();
            subset
                .iter()
                .map(|&p| gradient_via_derived(&model, p, &ev.u, &region, ev.obj.options()))
                .collect::<Result<_, _>>()?
        }
        Via::Fd => {
            let region = ev.obj.region().clone();
            subset
                .iter()
                .map(|&p| finite_difference(&mut ev.obj, &ev.u, p, args.h, &region))
                .collect::<Result<_, _>>()?
        }
    };
    let report = GradientReport {
        measure: measure_name(ev.query.kind),
        via: match args.via {
            Via::Eqsys => "eqsys",
            Via::Derived => "derived",
            Via::Fd => "fd",
        },
        point: named(&params, &ev.u),
        value,
        gradient: subset
            .iter()
            .map(|&p| params.name(p).to_string())
            .zip(grads)
            .collect(),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn derive(args: &DeriveArgs, out: &mut dyn Write) -> Result<u8> {
    let raw = read_raw_model(&args.model)?;
    let pmc = preprocess(&raw, &raw.targets)?;
    let wfa = pmc.derived_automaton_named(&args.param)?;
    let (pmc_path, dot_path) = (
        with_extension(&args.out, "pmc"),
        with_extension(&args.out, "dot"),
    );
    fs::write(&pmc_path, serialize_wfa(&wfa))
        .with_context(|| format!("writing {}", pmc_path.display()))?;
    fs::write(&dot_path, wfa_to_dot(&wfa))
        .with_context(|| format!("writing {}", dot_path.display()))?;
    writeln!(
        out,
        "{}, {} ({} cross edges); wrote {} and {}",
        plural(wfa.num_states(), "state"),
        plural(wfa.num_transitions(), "transition"),
        wfa.cross_edges().count(),
        pmc_path.display(),
        dot_path.display()
    )?;
    Ok(EXIT_OK)
}

/// JSON report of a feasibility search.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct SolveReport {
    pub property: String,
    pub status: Status,
    pub u_found: BTreeMap<String, f64>,
    pub value: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub value_solves: usize,
    pub gradient_solves: usize,
    /// Seconds in the search loop, excluding parsing and preprocessing.
    pub wall_time: f64,
    pub preprocess_time: f64,
    pub final_mu: Option<f64>,
}

impl SolveReport {
    pub fn new(
        query: &PropertyQuery,
        params: &ParameterSet,
        r: &RunResult,
        preprocess_time: f64,
    ) -> Self {
        SolveReport {
            property: query.to_string(),
            status: r.status,
            u_found: named(params, &r.u_found),
            value: r.value,
            iterations: r.iterations,
            restarts: r.restarts,
            value_solves: r.value_solves,
            gradient_solves: r.gradient_solves,
            wall_time: r.wall_time,
            preprocess_time,
            final_mu: r.final_mu,
        }
    }
}

pub fn solve(args: &SolveArgs, out: &mut dyn Write) -> Result<u8> {
    let started = Instant::now();
    let query = load_property(&args.property)?;
    let cfg = args.config(&query)?;
    let pmc = load_model(&args.model, query.kind)?;
    let region = load_region(args.region.as_deref(), pmc.params())?;
    let mut obj = make_pmc_objective(&pmc, &query, &region, args.solver.options())?;
    let preprocess_time = started.elapsed().as_secs_f64();
    let result = feasibility_search(&mut obj, &region, &cfg)?;
    let report = SolveReport::new(&query, pmc.params(), &result, preprocess_time);
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(match result.status {
        Status::Feasible => EXIT_OK,
        Status::Exhausted => EXIT_EXHAUSTED,
    })
}

pub fn generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<u8> {
    let (spec, seed) = parse_generator(&args.spec)?;
    let (pmc, region) = generate_synthetic(&spec, seed)?;
    fs::write(&args.out, serialize_model(&pmc))
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.region {
        fs::write(path, pmcgd_core::textio::serialize_region(&region))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(
        out,
        "{}, {}, {}",
        plural(pmc.num_states(), "state"),
        plural(pmc.num_transitions(), "transition"),
        plural(pmc.params().len(), "parameter")
    )?;
    Ok(EXIT_OK)
}

pub fn run(cmd: &Command, out: &mut dyn Write) -> Result<u8> {
    match cmd {
        Command::Check(a) => check(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Gradient(a) => gradient(a, out),
        Command::Derive(a) => derive(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Bench(a) => crate::bench::run_bench(a, out),
        Command::Generate(a) => generate(a, out),
    }
}
