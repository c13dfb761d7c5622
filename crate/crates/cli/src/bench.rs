//! Benchmark manifests: every model is searched with every method,
//! restriction, seed and repetition, and the runs are written as CSV and
//! JSON.
//!
//! A manifest is plain `key = value` text. Global keys come first; each
//! `[model NAME]` section then names one model:
//!
//! ```text
//! repetitions = 2
//! seeds = 1, 2, 3
//! methods = momentum-sign, plain, adam, momentum@gamma=0
//! restrictions = projection, barrier
//! baseline = momentum-sign
//!
//! [model running]
//! file = running.pmc
//! property = ER >= 2.9
//! region = running.region
//!
//! [model synth]
//! generate = states=200 params=10 seed=3 sink_density=0.1
//! property = P >= 0.3
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pmcgd_core::descent::{feasibility_search, DescentConfig, Method, Restriction, Status};
use pmcgd_core::linsolve::{Backend, SolverOptions};
use pmcgd_core::textio::{parse_region, MeasureKind};
use pmcgd_core::{
    generate_synthetic, make_pmc_objective, parse_property, preprocess, preprocess_for_reward, Pmc,
    PropertyQuery, Region,
};

use crate::inputs::{load_region, parse_generator, read_raw_model};

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub manifest: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the manifest's thread count.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// One method column of the benchmark: an update rule, the sign flag and
/// hyperparameter overrides, written `momentum-sign@gamma=0,lr=0.05`.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method,
    pub sign: bool,
    pub overrides: Vec<(String, f64)>,
}

impl MethodSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let label = text.trim().to_string();
        let (head, tail) = label.split_once('@').unwrap_or((&label, ""));
        let (name, sign) = match head.strip_suffix("-sign") {
            Some(n) => (n, true),
            None => (head, false),
        };
        let method: Method = name.parse().map_err(anyhow::Error::msg)?;
        ensure!(
            !sign || method.supports_sign(),
            "method `{name}` has no sign variant"
        );
        let mut overrides = Vec::new();
        for kv in tail.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("expected `key=value` in `{label}`"))?;
            let k = k.trim();
            ensure!(
                matches!(k, "lr" | "gamma" | "beta" | "batch_size"),
                "unknown override `{k}` in `{label}`"
            );
            let v: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("invalid value in `{label}`"))?;
            overrides.push((k.to_string(), v));
        }
        Ok(MethodSpec {
            label,
            method,
            sign,
            overrides,
        })
    }

    fn apply(&self, cfg: &mut DescentConfig) {
        cfg.method = self.method;
        cfg.sign = self.sign;
        for (k, v) in &self.overrides {
            match k.as_str() {
                "lr" => cfg.lr = *v,
                "gamma" => cfg.gamma = *v,
                "beta" => cfg.beta = *v,
                "batch_size" => cfg.batch_size = *v as usize,
                _ => unreachable!("checked when parsed"),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    File(PathBuf),
    Generate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub name: String,
    pub source: ModelSource,
    pub property: String,
    pub region: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSpec>,
    pub restrictions: Vec<Restriction>,
    pub lr: f64,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    pub backend: Backend,
    pub baseline: Option<String>,
    pub threads: usize,
    pub models: Vec<ModelEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            repetitions: 1,
            seeds: vec![0],
            methods: vec![MethodSpec::parse("momentum-sign").expect("valid")],
            restrictions: vec![Restriction::Projection],
            lr: 0.1,
            max_iterations: 10_000,
            time_limit: None,
            backend: Backend::Gmres,
            baseline: None,
            threads: 1,
            models: Vec::new(),
        }
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Manifest {
    /// Parses manifest text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut m = Manifest::default();
        let mut current: Option<(String, BTreeMap<String, String>)> = None;
        let mut sections = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = || format!("line {}", ln + 1);
            if let Some(header) = line.strip_prefix('[') {
                let name = header
                    .strip_suffix(']')
                    .and_then(|h| h.trim().strip_prefix("model"))
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .with_context(|| format!("{}: expected `[model NAME]`", at()))?;
                sections.extend(current.take());
                current = Some((name.to_string(), BTreeMap::new()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{}: expected `key = value`", at()))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some((_, keys)) = current.as_mut() {
                ensure!(
                    keys.insert(k.to_string(), v.to_string()).is_none(),
                    "{}: repeated key `{k}`",
                    at()
                );
                continue;
            }
            let ctx = || format!("{}: invalid value for `{k}`", at());
            match k {
                "repetitions" => m.repetitions = v.parse().with_context(ctx)?,
                "seeds" => {
                    m.seeds = list(v)
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .with_context(ctx)?
                }
                "methods" => {
                    m.methods = list(v)
                        .map(MethodSpec::parse)
                        .collect::<Result<_>>()
                        .with_context(ctx)?
                }
                "restrictions" => {
                    m.restrictions = list(v)
                        .map(|r| r.parse::<Restriction>().map_err(anyhow::Error::msg))
                        .collect::<Result<_>>()
                        .with_context(ctx)?
                }
                "lr" => m.lr = v.parse().with_context(ctx)?,
                "max_iterations" => m.max_iterations = v.parse().with_context(ctx)?,
                "time_limit" => {
                    let secs: f64 = v.parse().with_context(ctx)?;
                    ensure!(secs > 0.0 && secs.is_finite(), ctx());
                    m.time_limit = Some(Duration::from_secs_f64(secs));
                }
                "backend" => m.backend = v.parse().map_err(anyhow::Error::msg).with_context(ctx)?,
                "baseline" => m.baseline = Some(v.to_string()),
                "threads" => m.threads = v.parse().with_context(ctx)?,
                _ => bail!("{}: unknown key `{k}`", at()),
            }
        }
        sections.extend(current);
        for (name, mut keys) in sections {
            let source = match (keys.remove("file"), keys.remove("generate")) {
                (Some(f), None) => ModelSource::File(base.join(f)),
                (None, Some(g)) => ModelSource::Generate(g),
                _ => bail!("model `{name}` needs exactly one of `file` and `generate`"),
            };
            let property = keys
                .remove("property")
                .with_context(|| format!("model `{name}` has no property"))?;
            let region = keys.remove("region").map(|r| base.join(r));
            if let Some(k) = keys.keys().next() {
                bail!("model `{name}`: unknown key `{k}`");
            }
            m.models.push(ModelEntry {
                name,
                source,
                property,
                region,
            });
        }
        ensure!(!m.models.is_empty(), "manifest lists no models");
        ensure!(
            m.repetitions > 0 && !m.seeds.is_empty(),
            "need at least one seed and repetition"
        );
        ensure!(
            !m.methods.is_empty() && !m.restrictions.is_empty(),
            "need methods and restrictions"
        );
        ensure!(m.threads > 0, "threads must be positive");
        if let Some(b) = &m.baseline {
            ensure!(
                m.methods.iter().any(|s| &s.label == b),
                "baseline `{b}` is not among the methods"
            );
        }
        let mut names: Vec<&str> = m.models.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        ensure!(
            names.windows(2).all(|w| w[0] != w[1]),
            "model names must be unique"
        );
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Manifest::parse(&text, base).with_context(|| format!("{}", path.display()))
    }
}

/// A model after parsing and preprocessing, shared by all of its runs.
struct Prepared {
    name: String,
    query: PropertyQuery,
    pmc: Pmc,
    region: Region,
    preprocess_time: f64,
}

fn prepare(entry: &ModelEntry) -> Result<Prepared> {
    let started = Instant::now();
    let query = parse_property(&entry.property)?;
    let (pmc, default_region) = match &entry.source {
        ModelSource::File(path) => {
            let raw = read_raw_model(path)?;
            let pmc = match query.kind {
                MeasureKind::Reachability => preprocess(&raw, &raw.targets)?,
                MeasureKind::ExpectedReward => preprocess_for_reward(&raw, &raw.targets)?,
            };
            (pmc, None)
        }
        ModelSource::Generate(text) => {
            let (spec, seed) = parse_generator(text)?;
            let (pmc, region) = generate_synthetic(&spec, seed)?;
            (pmc, Some(region))
        }
    };
    let region = match (&entry.region, default_region) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_region(&text, pmc.params())?
        }
        (None, Some(r)) => r,
        (None, None) => load_region(None, pmc.params())?,
    };
    Ok(Prepared {
        name: entry.name.clone(),
        query,
        pmc,
        region,
        preprocess_time: started.elapsed().as_secs_f64(),
    })
}

/// One search of the benchmark.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub model: String,
    pub property: String,
    pub method: String,
    pub restriction: String,
    pub lr: f64,
    pub seed: u64,
    pub rep: usize,
    /// `feasible`, `exhausted` or `error`.
    pub status: String,
    pub value: Option<f64>,
    pub u_found: BTreeMap<String, f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub value_solves: usize,
    pub gradient_solves: usize,
    pub wall_time: f64,
    pub preprocess_time: f64,
    pub final_mu: Option<f64>,
    pub error: Option<String>,
}

struct Job<'a> {
    model: &'a Prepared,
    method: &'a MethodSpec,
    restriction: Restriction,
    seed: u64,
    rep: usize,
}

fn run_job(job: &Job<'_>, m: &Manifest) -> RunRecord {
    let mut rec = RunRecord {
        model: job.model.name.clone(),
        property: job.model.query.to_string(),
        method: job.method.label.clone(),
        restriction: job.restriction.to_string(),
        lr: m.lr,
        seed: job.seed,
        rep: job.rep,
        status: "error".into(),
        value: None,
        u_found: BTreeMap::new(),
        iterations: 0,
        restarts: 0,
        value_solves: 0,
        gradient_solves: 0,
        wall_time: 0.0,
        preprocess_time: job.model.preprocess_time,
        final_mu: None,
        error: None,
    };
    let mut cfg = DescentConfig {
        restriction: job.restriction,
        lr: m.lr,
        seed: job.seed,
        max_iterations: m.max_iterations,
        time_limit: m.time_limit,
        ..DescentConfig::for_query(&job.model.query)
    };
    job.method.apply(&mut cfg);
    rec.lr = cfg.lr;
    let opts = SolverOptions {
        backend: m.backend,
        ..Default::default()
    };
    let outcome = cfg
        .validate()
        .map_err(anyhow::Error::from)
        .and_then(|_| {
            Ok(make_pmc_objective(
                &job.model.pmc,
                &job.model.query,
                &job.model.region,
                opts,
            )?)
        })
        .and_then(|mut obj| Ok(feasibility_search(&mut obj, &job.model.region, &cfg)?));
    match outcome {
        Ok(r) => {
            rec.status = match r.status {
                Status::Feasible => "feasible",
                Status::Exhausted => "exhausted",
            }
            .into();
            rec.value = Some(r.value);
            rec.u_found = job
                .model
                .pmc
                .params()
                .names()
                .iter()
                .cloned()
                .zip(r.u_found)
                .collect();
            rec.iterations = r.iterations;
            rec.restarts = r.restarts;
            rec.value_solves = r.value_solves;
            rec.gradient_solves = r.gradient_solves;
            rec.wall_time = r.wall_time;
            rec.final_mu = r.final_mu;
        }
        Err(e) => rec.error = Some(format!("{e:#}")),
    }
    rec
}

/// Runs every cell of the manifest. Models that fail to load produce one
/// error record per run instead of aborting the benchmark.
pub fn run_manifest(m: &Manifest) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.threads)
        .build()
        .context("building thread pool")?;
    let mut records = Vec::new();
    for entry in &m.models {
        let prepared = match prepare(entry) {
            Ok(p) => p,
            Err(e) => {
                let msg = format!("{e:#}");
                for method in &m.methods {
                    for r in &m.restrictions {
                        for &seed in &m.seeds {
                            for rep in 0..m.repetitions {
                                records.push(RunRecord {
                                    model: entry.name.clone(),
                                    property: entry.property.clone(),
                                    method: method.label.clone(),
                                    restriction: r.to_string(),
                                    lr: m.lr,
                                    seed,
                                    rep,
                                    status: "error".into(),
                                    value: None,
                                    u_found: BTreeMap::new(),
                                    iterations: 0,
                                    restarts: 0,
                                    value_solves: 0,
                                    gradient_solves: 0,
                                    wall_time: 0.0,
                                    preprocess_time: 0.0,
                                    final_mu: None,
                                    error: Some(msg.clone()),
                                });
                            }
                        }
                    }
                }
                continue;
            }
        };
        let mut jobs = Vec::new();
        for method in &m.methods {
            for &restriction in &m.restrictions {
                for &seed in &m.seeds {
                    for rep in 0..m.repetitions {
                        jobs.push(Job {
                            model: &prepared,
                            method,
                            restriction,
                            seed,
                            rep,
                        });
                    }
                }
            }
        }
        let batch: Vec<RunRecord> =
            pool.install(|| jobs.par_iter().map(|j| run_job(j, m)).collect());
        records.extend(batch);
    }
    Ok(records)
}

const HEADER: [&str; 17] = [
    "row",
    "model",
    "method",
    "restriction",
    "lr",
    "seed",
    "rep",
    "status",
    "value",
    "iterations",
    "restarts",
    "value_solves",
    "gradient_solves",
    "wall_time",
    "preprocess_time",
    "final_mu",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Writes `results.csv`: one `run` row per search, then one `mean` row per
/// (model, method, restriction) cell. In mean rows `status` is the
/// feasible fraction and `seed`/`rep` are empty.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            "run".to_string(),
            r.model.clone(),
            r.method.clone(),
            r.restriction.clone(),
            r.lr.to_string(),
            r.seed.to_string(),
            r.rep.to_string(),
            r.status.clone(),
            opt(r.value),
            r.iterations.to_string(),
            r.restarts.to_string(),
            r.value_solves.to_string(),
            r.gradient_solves.to_string(),
            r.wall_time.to_string(),
            r.preprocess_time.to_string(),
            opt(r.final_mu),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let mut cells: Vec<(&str, &str, &str)> = Vec::new();
    for r in records {
        let key = (r.model.as_str(), r.method.as_str(), r.restriction.as_str());
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    for (model, method, restriction) in cells {
        let rows: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.model == model && r.method == method && r.restriction == restriction)
            .collect();
        let ok: Vec<&&RunRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
        let feasible =
            rows.iter().filter(|r| r.status == "feasible").count() as f64 / rows.len() as f64;
        let values: Vec<f64> = ok.iter().filter_map(|r| r.value).collect();
        let mus: Vec<f64> = ok.iter().filter_map(|r| r.final_mu).collect();
        let errors = rows.len() - ok.len();
        w.write_record([
            "mean".to_string(),
            model.to_string(),
            method.to_string(),
            restriction.to_string(),
            rows[0].lr.to_string(),
            String::new(),
            String::new(),
            feasible.to_string(),
            if values.is_empty() {
                String::new()
            } else {
                mean(values.into_iter()).to_string()
            },
            mean(ok.iter().map(|r| r.iterations as f64)).to_string(),
            mean(ok.iter().map(|r| r.restarts as f64)).to_string(),
            mean(ok.iter().map(|r| r.value_solves as f64)).to_string(),
            mean(ok.iter().map(|r| r.gradient_solves as f64)).to_string(),
            mean(ok.iter().map(|r| r.wall_time)).to_string(),
            mean(rows.iter().map(|r| r.preprocess_time)).to_string(),
            if mus.is_empty() {
                String::new()
            } else {
                mean(mus.into_iter()).to_string()
            },
            if errors == 0 {
                String::new()
            } else {
                format!("{errors} failed")
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `scatter_<label>.csv` for each non-baseline method, pairing its
/// runs with the baseline's run on the same model, restriction, seed and
/// repetition.
pub fn write_scatter(records: &[RunRecord], baseline: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if r.method != baseline && !labels.contains(&r.method.as_str()) {
            labels.push(&r.method);
        }
    }
    let mut written = Vec::new();
    for label in labels {
        let file: String = label
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let path = dir.join(format!("scatter_{file}.csv"));
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record([
            "model",
            "restriction",
            "seed",
            "rep",
            "baseline_status",
            "baseline_time",
            "status",
            "time",
        ])?;
        for alt in records.iter().filter(|r| r.method == label) {
            let Some(base) = records.iter().find(|b| {
                b.method == baseline
                    && b.model == alt.model
                    && b.restriction == alt.restriction
                    && b.seed == alt.seed
                    && b.rep == alt.rep
            }) else {
                continue;
            };
            w.write_record([
                alt.model.clone(),
                alt.restriction.clone(),
                alt.seed.to_string(),
                alt.rep.to_string(),
                base.status.clone(),
                base.wall_time.to_string(),
                alt.status.clone(),
                alt.wall_time.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn run_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<u8> {
    let mut manifest = Manifest::load(&args.manifest)?;
    if let Some(t) = args.threads {
        ensure!(t > 0, "threads must be positive");
        manifest.threads = t;
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let records = run_manifest(&manifest)?;
    write_csv(&records, &args.out.join("results.csv"))?;
    let json = args.out.join("results.json");
    fs::write(&json, serde_json::to_string_pretty(&records)?)
        .with_context(|| format!("writing {}", json.display()))?;
    if let Some(b) = &manifest.baseline {
        write_scatter(&records, b, &args.out)?;
    }
    let feasible = records.iter().filter(|r| r.status == "feasible").count();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    writeln!(
        out,
        "{} runs: {feasible} feasible, {} exhausted, {errors} failed; results in {}",
        records.len(),
        records.len() - feasible - errors,
        args.out.display()
    )?;
    Ok(crate::commands::EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_specs() {
        let s = MethodSpec::parse("momentum-sign@gamma=0,lr=0.05").unwrap();
        assert_eq!(s.method, Method::Momentum);
        assert!(s.sign);
        assert_eq!(
            s.overrides,
            vec![("gamma".into(), 0.0), ("lr".into(), 0.05)]
        );
        assert!(MethodSpec::parse("adam-sign").is_err());
        assert!(MethodSpec::parse("momentum@eps=1").is_err());
        assert!(MethodSpec::parse("sgd").is_err());
    }

    #[test]
    fn manifest_parsing() {
        let text = "seeds = 1, 2\nmethods = momentum-sign, plain\nbaseline = momentum-sign\n\
                    time_limit = 5 # seconds\n\n[model a]\nfile = a.pmc\nproperty = P >= 0.5\n\
                    [model b]\ngenerate = states=20 params=2\nproperty = ER <= 3\nregion = b.region\n";
        let m = Manifest::parse(text, Path::new("/base")).unwrap();
        assert_eq!(m.seeds, vec![1, 2]);
        assert_eq!(m.methods.len(), 2);
        assert_eq!(m.time_limit, Some(Duration::from_secs(5)));
        assert_eq!(
            m.models[0].source,
            ModelSource::File(PathBuf::from("/base/a.pmc"))
        );
        assert_eq!(m.models[1].region, Some(PathBuf::from("/base/b.region")));

        for bad in [
            "[model a]\nproperty = P >= 1\n",
            "[model a]\nfile = x\ngenerate = states=3\nproperty = P >= 1\n",
            "colour = red\n[model a]\nfile = x\nproperty = P >= 1\n",
            "baseline = adam\n[model a]\nfile = x\nproperty = P >= 1\n",
            "seeds = 1\n",
            "[model a]\nfile = x\nproperty = P >= 1\n[model a]\nfile = y\nproperty = P >= 1\n",
        ] {
            assert!(Manifest::parse(bad, Path::new(".")).is_err(), "{bad}");
        }
    }
}
