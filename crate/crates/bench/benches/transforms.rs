use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resmarg::kron::{kron_matvec, query_factors, QueryKind};
use resmarg::tensor::{decomp, decompose_full, recon};
use resmarg_bench::{cube, random_marginal};

fn decomp_full_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("decomp");
    for n in [8usize, 16, 32, 64] {
        let (d, g) = cube(3, n);
        let mu = random_marginal(&d, &g, 1);
        let factors = query_factors(
            &d,
            &QueryKind::Decomp {
                tau: g.clone(),
                gamma: g.clone(),
            },
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::new("in-axis", n), &n, |b, _| {
            b.iter(|| decomp(&mu, &g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kronecker", n), &n, |b, _| {
            b.iter(|| kron_matvec(&factors, mu.values().data()).unwrap())
        });
    }
    group.finish();
}

fn recon_full_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("recon");
    for n in [8usize, 16, 32, 64] {
        let (d, g) = cube(3, n);
        let z = decomp(&random_marginal(&d, &g, 2), &g).unwrap();
        let factors = query_factors(
            &d,
            &QueryKind::Recon {
                tau: g.clone(),
                gamma: g.clone(),
            },
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::new("in-axis", n), &n, |b, _| {
            b.iter(|| recon(&z, &g, &d).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kronecker", n), &n, |b, _| {
            b.iter(|| kron_matvec(&factors, z.values().data()).unwrap())
        });
    }
    group.finish();
}

fn decompose_all_residuals(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose_full");
    for k in 2..=5usize {
        let (d, g) = cube(k, 8);
        let mu = random_marginal(&d, &g, 3);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| decompose_full(&mu).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    decomp_full_residual,
    recon_full_residual,
    decompose_all_residuals
);
criterion_main!(benches);
