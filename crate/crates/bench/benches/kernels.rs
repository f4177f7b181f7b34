use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use morse_dephasing::bath::{eta, gamma, kernel_table, BathParams};

fn single_points(c: &mut Criterion) {
    let bath = BathParams::new(0.01, 9.8387, 0.1).unwrap();
    let mut group = c.benchmark_group("kernel_point");
    for t in [1e-2, 1.0, 1e2, 1e4] {
        group.bench_with_input(BenchmarkId::new("gamma", t), &t, |b, &t| {
            b.iter(|| gamma(&bath, black_box(t)))
        });
        group.bench_with_input(BenchmarkId::new("eta", t), &t, |b, &t| {
            b.iter(|| eta(&bath, black_box(t)))
        });
    }
    group.finish();
}

fn table(c: &mut Criterion) {
    let bath = BathParams::new(0.01, 9.8387, 0.1).unwrap();
    let times: Vec<f64> = (0..400).map(|i| 1e-2 * 1e6f64.powf(i as f64 / 399.0)).collect();
    c.bench_function("kernel_table_400", |b| {
        b.iter(|| kernel_table(&bath, black_box(&times)))
    });
}

criterion_group!(benches, single_points, table);
criterion_main!(benches);
