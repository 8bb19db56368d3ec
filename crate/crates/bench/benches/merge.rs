//! Criterion benchmarks: the batch merge kernel across lane widths, the
//! cycle-level model, and the complete sort.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use flims_core::oracle::{gen_dataset, DatasetSpec};
use flims_core::sorter::{kernel_merge, sort, SortConfig};
use flims_core::{merge_full, MergerConfig, Record, SortRule, Variant};

fn sorted_halves(n: usize, seed: u64) -> (Vec<Record>, Vec<Record>) {
    let a = gen_dataset(&DatasetSpec::uniform(n, seed).sorted());
    let b = gen_dataset(&DatasetSpec::uniform(n, seed ^ 0xFF).sorted());
    (a, b)
}

fn bench_kernel(c: &mut Criterion) {
    let n = 1 << 20;
    let (a, b) = sorted_halves(n, 1);
    let mut group = c.benchmark_group("kernel_merge");
    group.throughput(Throughput::Elements(2 * n as u64));
    for w in [8usize, 16, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(w), &w, |bench, &w| {
            bench.iter(|| kernel_merge(&a, &b, w, SortRule::default()).unwrap());
        });
    }
    group.finish();
}

fn bench_cycle_model(c: &mut Criterion) {
    let n = 1 << 14;
    let (a, b) = sorted_halves(n, 2);
    let mut group = c.benchmark_group("cycle_model_merge");
    group.throughput(Throughput::Elements(2 * n as u64));
    for variant in [Variant::Plain, Variant::Flimsj] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{variant:?}")),
            &variant,
            |bench, &variant| {
                bench.iter(|| merge_full(&a, &b, &MergerConfig::new(16, variant)).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_sort(c: &mut Criterion) {
    let n = 1 << 20;
    let data = gen_dataset(&DatasetSpec::uniform(n, 3));
    let mut group = c.benchmark_group("sort");
    group.throughput(Throughput::Elements(n as u64));
    group.sample_size(10);
    for threads in [1usize, 4] {
        group.bench_with_input(
            BenchmarkId::from_parameter(threads),
            &threads,
            |bench, &threads| {
                bench.iter(|| {
                    let mut buf = data.clone();
                    sort(
                        &mut buf,
                        &SortConfig {
                            threads,
                            ..SortConfig::default()
                        },
                    )
                    .unwrap();
                    buf
                });
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_kernel, bench_cycle_model, bench_sort);
criterion_main!(benches);
