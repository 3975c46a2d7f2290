use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use timebin_core::qber::{brute_force_symbol_error, EmptyFramePolicy, ErrorReport};

fn closed_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_form");
    for m in [4u32, 10, 16, 20] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| ErrorReport::compute(black_box(1 << m), 1e-3, 0.0625, EmptyFramePolicy::Erasure))
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    c.bench_function("enumerate_y16", |b| {
        b.iter(|| brute_force_symbol_error(black_box(16), 0.1, 0.9))
    });
}

criterion_group!(benches, closed_form, enumeration);
criterion_main!(benches);
