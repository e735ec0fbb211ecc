use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use exmat::constructors::{construct_block, random_block_spec, BlockVariant};
use exmat::exec::Exec;
use exmat::extremal::{search, SearchBudget};
use exmat::Tolerances;

fn modes() -> Vec<(&'static str, Exec)> {
    vec![
        ("sequential", Exec::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Exec::Parallel),
    ]
}

fn extremal_search(c: &mut Criterion) {
    let tol = Tolerances::default();
    let budget = SearchBudget { grid_resolution: 12, multistarts: 8, local_iters: 200, ..SearchBudget::default() };
    let mut group = c.benchmark_group("extremal_search");
    group.sample_size(10);
    for n in [3usize, 4] {
        let e = construct_block(&random_block_spec(BlockVariant::Strict, n, 1).unwrap()).unwrap();
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n), &e, |b, e| {
                b.iter(|| search(black_box(e), &budget, &tol, None, exec).unwrap().best_norm)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, extremal_search);
criterion_main!(benches);
