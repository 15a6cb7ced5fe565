use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use metric_clt::clt::{run_clt_experiment, CltConfig};
use metric_clt::lp::{estimate_assumption_constants_with, DEFAULT_D_GRID};
use metric_clt::measure::ProbabilityMeasure;
use metric_clt::metric::{make_cone_space, validate_metric_with};
use metric_clt::modified::build_d_eta_with;
use metric_clt::{Exec, Metric};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench(c: &mut Criterion) {
    let space = make_cone_space(8, 24).unwrap();
    let rows = space.rows();
    let mu = ProbabilityMeasure::uniform(space.len()).unwrap();

    let mut g = c.benchmark_group("validate_metric");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| validate_metric_with(black_box(&rows), 1e-9, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("build_d_eta");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_d_eta_with(black_box(&space), &mu, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("assumption_constants");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_assumption_constants_with(black_box(&space), &mu, &DEFAULT_D_GRID, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("clt_experiment");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let cfg = CltConfig { n_list: vec![500], replicates: 200, exec, ..CltConfig::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_clt_experiment(black_box(&space), &mu, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
