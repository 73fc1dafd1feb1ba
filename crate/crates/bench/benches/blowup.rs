use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cube_blowup::{build_blowup, subdivide};
use cube_blowup_bench::blowup_workloads;

fn blowups(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_blowup");
    group.sample_size(10);
    for (name, base, n) in blowup_workloads() {
        group.bench_function(name, |b| {
            b.iter(|| build_blowup(black_box(&base), n).unwrap())
        });
    }
    group.finish();
}

fn subdivisions(c: &mut Criterion) {
    let mut group = c.benchmark_group("subdivide");
    for (name, base, _) in blowup_workloads() {
        group.bench_function(name, |b| b.iter(|| subdivide(black_box(&base), 6)));
    }
    group.finish();
}

criterion_group!(benches, blowups, subdivisions);
criterion_main!(benches);
