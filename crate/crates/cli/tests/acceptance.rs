//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use pmcgd_cli::bench::RunRecord;
use pmcgd_core::descent::{Search, StepOutcome};
use pmcgd_core::gradient::{
    expected_reward, finite_difference, gradient_eqsys, gradient_via_derived, PolynomialObjective,
};
use pmcgd_core::linsolve::{Backend, SolverOptions};
use pmcgd_core::polynomial::{ratio, Monomial};
use pmcgd_core::textio::{serialize_model, MeasureKind};
use pmcgd_core::{
    feasibility_search, generate_synthetic, make_pmc_objective, parse_model, parse_property,
    parse_region, preprocess, preprocess_for_reward, DescentConfig, GeneratorSpec, Interval,
    Method, ParameterSet, PmcObjective, Polynomial, Region, Restriction, Status,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const RUNNING: &str = "params p;
state s0 init;
state s1 reward 1;
state s2 reward 2;
state s3 reward 3;
state good absorbing;
target good;
transition s0 -> s1 : p;
transition s0 -> s2 : 1 - p;
transition s1 -> s2 : p;
transition s1 -> s3 : 1 - p;
transition s2 -> good : 1;
transition s3 -> good : 1;
";

fn closed_form() -> Outcome {
    let started = Instant::now();
    let raw = parse_model(RUNNING).map_err(|e| e.to_string())?;
    let pmc = preprocess_for_reward(&raw, &raw.targets).map_err(|e| e.to_string())?;
    let region = Region::default_for(pmc.params());
    let opts = SolverOptions::default();
    let (mut worst_v, mut worst_g) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let p = 0.05 + 0.9 * i as f64 / 19.0;
        let v = expected_reward(&pmc, &[p], &region, &opts).map_err(|e| e.to_string())?;
        let g = gradient_eqsys(&pmc, &[p], &region, &[0], &opts).map_err(|e| e.to_string())?[0];
        worst_v = worst_v.max((v - (-p * p + 2.0 * p + 2.0)).abs());
        worst_g = worst_g.max((g - (-2.0 * p + 2.0)).abs());
    }
    let t = started.elapsed();
    check!(worst_v <= 1e-9, "value error {worst_v:e}");
    check!(worst_g <= 1e-8, "gradient error {worst_g:e}");
    check!(t < Duration::from_secs(1), "took {t:?}");
    Ok(format!(
        "20 points, max value error {worst_v:.1e}, max gradient error {worst_g:.1e}, {t:.2?}"
    ))
}

fn gradient_routes() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolverOptions::default();
    let (mut worst_route, mut worst_fd, mut partials) = (0.0f64, 0.0f64, 0usize);
    let models = 100;
    for seed in 0..models {
        let states = rng.random_range(4..=50usize);
        let params = rng.random_range(1..=10usize).min(states - 1);
        let spec = GeneratorSpec {
            sink_density: if seed % 3 == 0 { 0.1 } else { 0.0 },
            branching: rng.random_range(2..=4),
            ..GeneratorSpec::new(states, params)
        };
        let (pmc, region) = generate_synthetic(&spec, seed).map_err(|e| e.to_string())?;
        // Reachability-style models go through the reward transformation.
        let pmc = if pmc.bad().is_some() {
            pmc.reachability_to_reward()
        } else {
            pmc
        };
        let n = pmc.params().len();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
        let all: Vec<usize> = (0..n).collect();
        let g = gradient_eqsys(&pmc, &u, &region, &all, &opts).map_err(|e| e.to_string())?;
        let mut obj =
            PmcObjective::new(pmc.clone(), region.clone(), opts).map_err(|e| e.to_string())?;
        for p in 0..n {
            let scale = g[p].abs().max(1.0);
            let via =
                gradient_via_derived(&pmc, p, &u, &region, &opts).map_err(|e| e.to_string())?;
            let fd =
                finite_difference(&mut obj, &u, p, 1e-6, &region).map_err(|e| e.to_string())?;
            worst_route = worst_route.max((g[p] - via).abs() / scale);
            worst_fd = worst_fd.max((g[p] - fd).abs() / scale);
            partials += 1;
        }
    }
    let t = started.elapsed();
    check!(worst_route <= 1e-8, "eqsys vs derived {worst_route:e}");
    check!(worst_fd <= 1e-4, "finite differences {worst_fd:e}");
    check!(t < Duration::from_secs(30), "took {t:?}");
    Ok(format!(
        "{models} models, {partials} partials, eqsys/derived {worst_route:.1e}, fd {worst_fd:.1e} (relative), {t:.2?}"
    ))
}

fn quartic_poly() -> Polynomial {
    let ps = ParameterSet::new(["p"]).unwrap();
    let term = |c: i64, d: i64, k: u32| (Monomial::from_pairs([(0, k)]), ratio(c, d));
    Polynomial::from_terms(
        &ps,
        [
            term(1, 2, 4),
            term(-4, 1, 3),
            term(9, 1, 2),
            term(-4, 1, 1),
            term(2, 1, 0),
        ],
    )
    .unwrap()
}

fn f(p: f64) -> f64 {
    0.5 * p.powi(4) - 4.0 * p.powi(3) + 9.0 * p * p - 4.0 * p + 2.0
}

fn df(p: f64) -> f64 {
    2.0 * p.powi(3) - 12.0 * p * p + 18.0 * p - 4.0
}

fn quartic_cfg(method: Method, restriction: Restriction) -> DescentConfig {
    DescentConfig {
        method,
        sign: false,
        restriction,
        lr: 0.1,
        gamma: 0.9,
        comparator: pmcgd_core::Comparator::Gt,
        bound: 5.9,
        start: Some(vec![1.0]),
        max_iterations: 1000,
        ..Default::default()
    }
}

fn trajectory(cfg: &DescentConfig, region: &Region, steps: usize) -> Vec<f64> {
    let mut obj = PolynomialObjective::new(&quartic_poly());
    let mut s = Search::new(cfg, region).unwrap();
    let mut out = vec![s.point()[0]];
    for _ in 0..steps {
        s.step(&mut obj).unwrap();
        out.push(s.point()[0]);
    }
    out
}

fn interval_region(lb: f64, ub: f64) -> Region {
    Region::uniform(&ParameterSet::new(["p"]).unwrap(), lb, ub).unwrap()
}

fn trajectories() -> Outcome {
    let started = Instant::now();
    let region = interval_region(0.0, 3.0);

    // Hand-rolled recurrences as the oracle for the engine.
    let (mut u, mut v) = (1.0, 0.0);
    let mut plain = vec![u];
    for _ in 0..3 {
        u += 0.1 * df(u);
        plain.push(u);
    }
    let mut mom = vec![1.0];
    u = 1.0;
    for _ in 0..2 {
        v = 0.9 * v + 0.1 * df(u);
        u += v;
        mom.push(u);
    }
    let mut nag = vec![1.0];
    (u, v) = (1.0, 0.0);
    for _ in 0..2 {
        v = 0.9 * v + 0.1 * df(u + 0.9 * v);
        u += v;
        nag.push(u);
    }

    let got = trajectory(
        &quartic_cfg(Method::Plain, Restriction::Projection),
        &region,
        3,
    );
    for ((g, o), want) in got.iter().zip(&plain).zip([1.0, 1.4, 1.7168, 1.882177]) {
        check!(
            (g - o).abs() <= 1e-12 && (g - want).abs() <= 1e-4,
            "plain {got:?}"
        );
    }
    let mut obj = PolynomialObjective::new(&quartic_poly());
    let res = feasibility_search(
        &mut obj,
        &region,
        &quartic_cfg(Method::Plain, Restriction::Projection),
    )
    .map_err(|e| e.to_string())?;
    check!(
        res.status == Status::Feasible
            && res.iterations == 3
            && (res.value - 5.95845).abs() <= 1e-4,
        "plain search {res:?}"
    );
    check!(
        (f(res.u_found[0]) - res.value).abs() <= 1e-12,
        "value oracle"
    );

    let got = trajectory(
        &quartic_cfg(Method::Momentum, Restriction::Projection),
        &region,
        2,
    );
    check!(
        (got[2] - mom[2]).abs() <= 1e-12 && (got[2] - 2.0768).abs() <= 1e-4,
        "momentum {got:?}"
    );
    let got_nag = trajectory(
        &quartic_cfg(Method::Nag, Restriction::Projection),
        &region,
        2,
    );
    check!(
        (got_nag[2] - nag[2]).abs() <= 1e-12 && (got_nag[2] - 1.901235).abs() <= 1e-4,
        "nag {got_nag:?}"
    );
    let t = started.elapsed();
    check!(t < Duration::from_secs(1), "took {t:?}");
    Ok(format!(
        "plain 1.4/{:.4}/{:.6} f={:.5}, momentum {:.4}, nag {:.6}, {t:.2?}",
        plain[2], plain[3], res.value, got[2], got_nag[2]
    ))
}

fn restrictions() -> Outcome {
    let region = interval_region(0.5, 1.5);
    let mut obj = PolynomialObjective::new(&quartic_poly());

    check!(Interval::new(0.5, 1.5).clamp(1.72) == 1.5, "clamp");
    let mut s = Search::new(
        &quartic_cfg(Method::Momentum, Restriction::Projection),
        &region,
    )
    .unwrap();
    s.state.x = vec![1.4];
    s.state.v = vec![0.3];
    s.step(&mut obj).map_err(|e| e.to_string())?;
    check!(
        s.point() == vec![1.5] && s.state.v[0] == 0.0,
        "projection {:?} v={}",
        s.point(),
        s.state.v[0]
    );

    let cfg = quartic_cfg(Method::Plain, Restriction::Barrier);
    let mut s = Search::new(&cfg, &region).unwrap();
    let first = s.step(&mut obj).map_err(|e| e.to_string())?;
    let a = s.point()[0];
    let second = s.step(&mut obj).map_err(|e| e.to_string())?;
    let b = s.point()[0];
    check!(
        first == StepOutcome::Moved && (a - 1.38).abs() <= 1e-2,
        "barrier first step {a}"
    );
    check!(
        second == StepOutcome::LeftRegion && (b - 1.62).abs() <= 1e-2,
        "barrier second step {b}"
    );
    let slow = DescentConfig { lr: 0.01, ..cfg };
    let mut s = Search::new(&slow, &region).unwrap();
    for _ in 0..40 {
        s.step(&mut obj).map_err(|e| e.to_string())?;
    }
    let c = s.point()[0];
    check!(
        region.contains(&[c]) && (c - 1.46).abs() <= 0.02,
        "barrier eta=0.01 ends at {c}"
    );

    let compat = DescentConfig {
        logistic_compat: true,
        ..quartic_cfg(Method::Plain, Restriction::Logistic)
    };
    let mut s = Search::new(&compat, &region).unwrap();
    let q0 = s.state.x[0];
    s.step(&mut obj).map_err(|e| e.to_string())?;
    let (q, u) = (s.state.x[0], s.point()[0]);
    check!(
        (q0 - 0.5).abs() <= 1e-12 && (q - 0.594).abs() <= 1e-3,
        "logistic q {q0} -> {q}"
    );
    check!((u - 1.0235).abs() <= 1e-3, "logistic u {u}");
    Ok(format!(
        "projection 1.7168 -> 1.5, barrier 1 -> {a:.3} -> {b:.3}, eta=0.01 -> {c:.4}, logistic q {q:.4} u {u:.4}"
    ))
}

fn reductions() -> Outcome {
    let region = interval_region(0.0, 3.0);
    let plain = trajectory(
        &quartic_cfg(Method::Plain, Restriction::Projection),
        &region,
        100,
    );
    let mut worst = 0.0f64;
    for m in [Method::Momentum, Method::Nag] {
        let cfg = DescentConfig {
            gamma: 0.0,
            ..quartic_cfg(m, Restriction::Projection)
        };
        let t = trajectory(&cfg, &region, 100);
        for (a, b) in t.iter().zip(&plain) {
            worst = worst.max((a - b).abs());
        }
    }
    check!(worst <= 1e-12, "gamma=0 differs by {worst:e}");

    let wide = interval_region(-10.0, 10.0);
    let sign = DescentConfig {
        sign: true,
        ..quartic_cfg(Method::Plain, Restriction::Projection)
    };
    let t = trajectory(&sign, &wide, 100);
    let mut moved = 0;
    for w in t.windows(2) {
        let d = (w[1] - w[0]).abs();
        check!(d == 0.0 || (d - 0.1).abs() <= 1e-12, "sign step of {d}");
        moved += usize::from(d > 0.0);
    }
    check!(moved > 0, "sign trajectory never moved");
    Ok(format!(
        "momentum/nag with gamma=0 match plain over 100 steps (max diff {worst:.1e}); {moved} sign steps of exactly 0.1"
    ))
}

fn desk_scale() -> Outcome {
    let started = Instant::now();
    // Dense sinks behind constant rows keep the optimum below 1, and the
    // narrowed region keeps every parametric edge away from zero.
    let spec = GeneratorSpec {
        sink_density: 0.4,
        constant_fraction: 0.3,
        ..GeneratorSpec::new(1000, 100)
    };
    let (pmc, _) = generate_synthetic(&spec, 11).map_err(|e| e.to_string())?;
    let region = Region::uniform(pmc.params(), 0.05, 0.95).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let probe = parse_property("P >= 1").unwrap();
    let mut best = f64::NEG_INFINITY;
    for seed in 1..=5 {
        let cfg = DescentConfig {
            seed,
            max_iterations: 30,
            ..DescentConfig::for_query(&probe)
        };
        let mut obj = make_pmc_objective(&pmc, &probe, &region, opts).map_err(|e| e.to_string())?;
        let r = feasibility_search(&mut obj, &region, &cfg).map_err(|e| e.to_string())?;
        best = best.max(r.value);
    }
    let bound = 0.9 * best;
    let query = parse_property(&format!("P >= {bound}")).map_err(|e| e.to_string())?;
    let cfg = DescentConfig {
        seed: 1,
        time_limit: Some(Duration::from_secs(60)),
        ..DescentConfig::for_query(&query)
    };
    check!(
        cfg.method == Method::Momentum && cfg.sign && cfg.restriction == Restriction::Projection,
        "defaults"
    );
    let mut runs = Vec::new();
    for _ in 0..2 {
        let t0 = Instant::now();
        let mut obj = make_pmc_objective(&pmc, &query, &region, opts).map_err(|e| e.to_string())?;
        let r = feasibility_search(&mut obj, &region, &cfg).map_err(|e| e.to_string())?;
        runs.push((r, t0.elapsed()));
    }
    let (r, t) = &runs[0];
    check!(
        r.status == Status::Feasible,
        "status {:?}, value {} < {bound}",
        r.status,
        r.value
    );
    check!(*t < Duration::from_secs(60), "took {t:?}");
    check!(
        runs[1].0.u_found == r.u_found && runs[1].0.iterations == r.iterations,
        "second run differs"
    );
    Ok(format!(
        "1000 states, 100 parameters; best-of-5 {best:.4}, bound {bound:.4} met with {:.4} after {} iterations in {t:.2?}; repeat identical (total {:.1?})",
        r.value,
        r.iterations,
        started.elapsed()
    ))
}

fn soundness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let models = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    let manifest = dir.path().join("audit.bench");
    fs::write(
        &manifest,
        format!(
            "seeds = 1, 2, 3
methods = momentum-sign, plain, nag-sign, rmsprop, adam, radam, momentum@gamma=0
restrictions = projection, barrier, logistic
max_iterations = 500
time_limit = 20
baseline = momentum-sign
threads = 4

[model running]
file = {models}/running.pmc
property = ER >= 2.9
region = {models}/running.region

[model running-min]
file = {models}/running.pmc
property = ER <= 2.2

[model coin]
file = {models}/coin.pmc
property = P > 0.8

[model synth]
generate = states=120 params=8 seed=5 sink_density=0.1
property = P >= 0.3

[model synth-er]
generate = states=80 params=6 seed=9
property = ER <= 4
"
        ),
    )
    .map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_pmcgd"))
        .arg("bench")
        .arg(&manifest)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    check!(
        status.status.success(),
        "bench failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let records: Vec<RunRecord> = serde_json::from_str(
        &fs::read_to_string(out.join("results.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    check!(!records.is_empty(), "no runs");

    let direct = SolverOptions {
        backend: Backend::Direct,
        ..Default::default()
    };
    let mut cache: BTreeMap<String, (pmcgd_core::Pmc, Region)> = BTreeMap::new();
    let (mut feasible, mut violations, mut worst) = (0, Vec::new(), 0.0f64);
    for r in &records {
        check!(r.error.is_none(), "run failed: {:?}", r.error);
        if r.status != "feasible" {
            continue;
        }
        feasible += 1;
        let query = parse_property(&r.property).map_err(|e| e.to_string())?;
        if !cache.contains_key(&r.model) {
            let loaded = match r.model.as_str() {
                "synth" | "synth-er" => {
                    let (states, params, seed, sink) = if r.model == "synth" {
                        (120, 8, 5, 0.1)
                    } else {
                        (80, 6, 9, 0.0)
                    };
                    let spec = GeneratorSpec {
                        sink_density: sink,
                        ..GeneratorSpec::new(states, params)
                    };
                    generate_synthetic(&spec, seed).map_err(|e| e.to_string())?
                }
                name => {
                    let file = if name == "coin" {
                        "coin.pmc"
                    } else {
                        "running.pmc"
                    };
                    let text = fs::read_to_string(format!("{models}/{file}"))
                        .map_err(|e| e.to_string())?;
                    let raw = parse_model(&text).map_err(|e| e.to_string())?;
                    let pmc = match query.kind {
                        MeasureKind::Reachability => preprocess(&raw, &raw.targets),
                        MeasureKind::ExpectedReward => preprocess_for_reward(&raw, &raw.targets),
                    }
                    .map_err(|e| e.to_string())?;
                    let region = if name == "running" {
                        let text = fs::read_to_string(format!("{models}/running.region")).unwrap();
                        parse_region(&text, pmc.params()).map_err(|e| e.to_string())?
                    } else {
                        Region::default_for(pmc.params())
                    };
                    (pmc, region)
                }
            };
            cache.insert(r.model.clone(), loaded);
        }
        let (pmc, region) = &cache[&r.model];
        let u: Vec<f64> = pmc.params().names().iter().map(|n| r.u_found[n]).collect();
        if !region.contains(&u) {
            violations.push(format!(
                "{} {} seed {}: outside region",
                r.model, r.method, r.seed
            ));
            continue;
        }
        // Independent evaluation: fresh model, direct backend.
        let model = match query.kind {
            MeasureKind::Reachability => pmc.reachability_to_reward(),
            MeasureKind::ExpectedReward => pmc.clone(),
        };
        let v = expected_reward(&model, &u, region, &direct).map_err(|e| e.to_string())?;
        let recorded = r.value.unwrap_or(f64::NAN);
        let diff = (v - recorded).abs();
        worst = worst.max(diff / v.abs().max(1.0));
        if diff > 1e-8 * v.abs().max(1.0) || !query.holds(v) {
            violations.push(format!(
                "{} {} {} seed {}: recorded {recorded}, re-evaluated {v}",
                r.model, r.method, r.restriction, r.seed
            ));
        }
    }
    check!(
        violations.is_empty(),
        "{} violations, first: {}",
        violations.len(),
        violations[0]
    );
    check!(feasible > 0, "no feasible runs to audit");
    Ok(format!(
        "{} runs, {feasible} feasible re-verified, max deviation {worst:.1e}, 0 violations",
        records.len()
    ))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100u64 {
        let states = rng.random_range(3..=120usize);
        let spec = GeneratorSpec {
            sink_density: if seed % 2 == 0 { 0.15 } else { 0.0 },
            branching: rng.random_range(2..=5),
            constant_fraction: rng.random_range(0.0..0.5),
            ..GeneratorSpec::new(states, rng.random_range(0..=10usize).min(states - 2))
        };
        let (pmc, _) = generate_synthetic(&spec, seed).map_err(|e| e.to_string())?;
        let text = serialize_model(&pmc);
        let raw = parse_model(&text).map_err(|e| format!("seed {seed}: {e}"))?;
        let again = preprocess(&raw, &raw.targets).map_err(|e| e.to_string())?;
        check!(serialize_model(&again) == text, "seed {seed}: bytes differ");
    }
    Ok("100 generated models serialize -> parse -> serialize byte-identically".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form oracle", closed_form),
        ("gradient equivalence", gradient_routes),
        ("trajectory replay", trajectories),
        ("restriction examples", restrictions),
        ("reduction identities", reductions),
        ("desk-scale feasibility", desk_scale),
        ("soundness audit", soundness),
        ("parser round-trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
