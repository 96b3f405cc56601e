use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bsfw::experiment::{parse_config, run_cells};
use bsfw::parallel::Execution;

fn experiment_cells(c: &mut Criterion) {
    let cfg = parse_config(
        "n = 100\nm = 400\nsparsity = 0.05\ntau = 10\nestimators = saga, sarah\n\
         seeds = 0, 1, 2, 3\nbatch = 20\nepochs = 10\nT = 1000000\n",
    )
    .unwrap();
    let mut group = c.benchmark_group("run_cells");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_cells(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, experiment_cells);
criterion_main!(benches);
