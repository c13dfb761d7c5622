use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmcgd_bench::synthetic;
use pmcgd_core::gradient::{expected_reward, gradient_eqsys, gradient_via_derived};
use pmcgd_core::linsolve::{Backend, SolverOptions};
use pmcgd_core::{feasibility_search, make_pmc_objective, parse_property, DescentConfig};

fn opts(backend: Backend) -> SolverOptions {
    SolverOptions {
        backend,
        ..Default::default()
    }
}

fn value_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("value");
    for states in [100, 1000, 5000] {
        let (pmc, region, u) = synthetic(states, 20, 3);
        for backend in [Backend::Gmres, Backend::Direct] {
            g.bench_with_input(
                BenchmarkId::new(format!("{backend:?}"), states),
                &states,
                |b, _| b.iter(|| expected_reward(&pmc, &u, &region, &opts(backend)).unwrap()),
            );
        }
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient");
    let (pmc, region, u) = synthetic(1000, 32, 5);
    let all: Vec<usize> = (0..32).collect();
    for backend in [Backend::Gmres, Backend::Direct, Backend::Auto] {
        g.bench_function(format!("eqsys-32/{backend:?}"), |b| {
            b.iter(|| gradient_eqsys(&pmc, &u, &region, &all, &opts(backend)).unwrap())
        });
    }
    g.bench_function("derived-1", |b| {
        b.iter(|| gradient_via_derived(&pmc, 0, &u, &region, &opts(Backend::Gmres)).unwrap())
    });
    g.finish();
}

fn search(c: &mut Criterion) {
    let (pmc, region, _) = synthetic(500, 50, 7);
    let query = parse_property("P >= 0.99").unwrap();
    let cfg = DescentConfig {
        max_iterations: 20,
        ..DescentConfig::for_query(&query)
    };
    c.bench_function("search-20-steps", |b| {
        b.iter(|| {
            let mut obj =
                make_pmc_objective(&pmc, &query, &region, SolverOptions::default()).unwrap();
            feasibility_search(&mut obj, &region, &cfg).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = value_solves, gradients, search
}
criterion_main!(benches);
