use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cubeint::engine::{evaluate, CubeQuery};
use cubeint::harness::{bench_workload, generate_star};
use cubeint::novelty::pden;
use cubeint::peculiarity::{jaccard_peculiarity, value_peculiarity, Aggregation, ValueDistance, PAIR_CAP};
use cubeint::Exec;

const SEED: u64 = 7;
const HISTORY: usize = 5;

fn modes(c: &mut Criterion) {
    for rows in [10_000, 100_000] {
        let cube = generate_star(rows, SEED).cube().expect("generated cube");
        let (q, history, _) = bench_workload(SEED, HISTORY);
        let hist: Vec<&CubeQuery> = history.iter().collect();
        // yearly results keep the Hausdorff pair count under the cap
        let yearly = |x: &CubeQuery| {
            let mut y = x.clone();
            y.groupers[2] = 2;
            evaluate(&cube, &y, Exec::Sequential).expect("result")
        };
        let results: Vec<_> = history.iter().map(yearly).collect();
        let q_res = yearly(&q);

        let mut g = c.benchmark_group(format!("rows_{rows}"));
        g.sample_size(20);
        for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            g.bench_function(BenchmarkId::new("evaluate", name), |b| {
                b.iter(|| evaluate(&cube, &q, exec).unwrap())
            });
            g.bench_function(BenchmarkId::new("pden", name), |b| {
                b.iter(|| pden(&cube, &q, &hist, exec).unwrap())
            });
            g.bench_function(BenchmarkId::new("jaccard", name), |b| {
                b.iter(|| jaccard_peculiarity(&cube, &q, &hist, 1, exec).unwrap())
            });
            g.bench_function(BenchmarkId::new("hausdorff", name), |b| {
                b.iter(|| {
                    value_peculiarity(
                        cube.schema(),
                        &q_res,
                        &results,
                        ValueDistance::Hausdorff,
                        Aggregation::Average,
                        PAIR_CAP,
                        exec,
                    )
                    .unwrap()
                })
            });
        }
        g.finish();
    }
}

criterion_group!(benches, modes);
criterion_main!(benches);
