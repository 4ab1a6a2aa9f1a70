use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use groundsel::selection::{run_method, Method, MethodParams};
use groundsel_bench::reference_laplacian;

fn selection(c: &mut Criterion) {
    let params = MethodParams::default();
    let mut group = c.benchmark_group("select");
    group.sample_size(10);
    for n in [20, 40] {
        let l = reference_laplacian(n, 0);
        for m in [
            Method::GreedyQ,
            Method::InvTrace,
            Method::Logdet,
            Method::Degree,
            Method::Random,
        ] {
            group.bench_function(format!("{m}/n{n}"), |b| {
                b.iter(|| run_method(m, black_box(&l), 0.0, &params).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, selection);
criterion_main!(benches);
