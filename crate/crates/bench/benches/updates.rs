use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use resmarg::grem::UpdateMode;
use resmarg::mechanisms::run_iid_fixed;
use resmarg::{AttrSet, DpRng};
use resmarg_bench::{cube, random_table};

/// Thirty 3-way marginals over ten attributes, measured one after another.
fn sequence() -> Vec<AttrSet> {
    let mut triples = Vec::new();
    for a in 0..10 {
        for b in a + 1..10 {
            for c in b + 1..10 {
                triples.push(AttrSet::new(vec![a, b, c]));
            }
        }
    }
    (0..30).map(|i| triples[(i * 37) % triples.len()].clone()).collect()
}

fn lazy_vs_full(c: &mut Criterion) {
    let (d, _) = cube(10, 8);
    let table = random_table(&d, 20_000, 4);
    let seq = sequence();
    let mut group = c.benchmark_group("fixed_sequence");
    group.sample_size(10);
    for (name, mode) in [("lazy", UpdateMode::Lazy), ("full", UpdateMode::Full)] {
        group.bench_function(name, |b| {
            b.iter_batched(
                || DpRng::seed_from_u64(5),
                |mut rng| run_iid_fixed(&table, &seq, 1.0, &mut rng, mode).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, lazy_vs_full);
criterion_main!(benches);
