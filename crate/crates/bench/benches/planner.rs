use aiou_bench::{random_counts, rng};
use aiou_core::planner::{attainable_interval, solve_subgroups, sweep};
use aiou_core::stats::ConfusionCounts;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn planner(c: &mut Criterion) {
    let mut r = rng(0);
    let instances: Vec<(ConfusionCounts, f64)> = (0..20)
        .map(|_| {
            let n = random_counts(&mut r, 1000);
            let range = attainable_interval(&n).unwrap();
            (n, range.lo + 0.3 * (range.hi - range.lo))
        })
        .collect();
    c.bench_function("solve_subgroups x20", |bench| {
        bench.iter(|| {
            for (n, t) in &instances {
                black_box(solve_subgroups(n, *t, None, None).unwrap());
            }
        })
    });

    let original = ConfusionCounts::from_array([120, 300, 280, 150]);
    let targets: Vec<f64> = (0..5).map(|i| -0.5 + 0.1 * i as f64).collect();
    c.bench_function("sweep 5 targets", |bench| {
        bench.iter(|| sweep(black_box(&original), &targets).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = planner
}
criterion_main!(benches);
