use bayesdisc::search::{initial_policies, optimize_variable};
use bayesdisc::{coordinate_ascent, hill_climb_structure, DirichletMode, PriorSpec, SearchConfig};
use bayesdisc_bench::fixture;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn single_variable(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_variable");
    let config = SearchConfig::default();
    for rows in [100, 400] {
        let (data, structure) = fixture(4, rows, 2);
        let policies = initial_policies(&data, &config.init, config.resolved_r_max(rows)).unwrap();
        for (label, dirichlet) in [("k2", DirichletMode::K2 { alpha: 1.0 }), ("bdeu", DirichletMode::BDeu { ess: 1.0 })] {
            let prior = PriorSpec {
                dirichlet,
                ..PriorSpec::default()
            };
            group.bench_with_input(BenchmarkId::new(label, rows), &rows, |b, _| {
                b.iter(|| optimize_variable(1, &policies, &structure, &data, &prior, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn full_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    let (data, structure) = fixture(5, 300, 3);
    let config = SearchConfig::default();
    let prior = PriorSpec::default();
    let init = initial_policies(&data, &config.init, config.resolved_r_max(300)).unwrap();
    group.bench_function("coordinate_ascent", |b| {
        b.iter(|| coordinate_ascent(&init, &structure, &data, &prior, &config).unwrap())
    });
    group.bench_function("hill_climb_structure", |b| {
        b.iter(|| hill_climb_structure(&data, &prior, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_variable, full_search);
criterion_main!(benches);
