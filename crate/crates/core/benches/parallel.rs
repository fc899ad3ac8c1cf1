//! Sequential vs data-parallel execution of the verification pipelines.
//!
//! Each group runs the same workload under both execution modes so the
//! rayon dispatch overhead and speedup are directly comparable. With the
//! `parallel` feature disabled only the sequential side is measured.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riccati_schwarz::chain::ChainParams;
use riccati_schwarz::exec::Parallelism;
use riccati_schwarz::expr::{rat_int, SymbolTable};
use riccati_schwarz::numverify::{identity_suite, ratio_schwarzian, riccati_residual, NumericSettings};

fn modes() -> Vec<(&'static str, Parallelism)> {
    let mut m = vec![("sequential", Parallelism::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("rayon", Parallelism::Rayon));
    m
}

/// Round-trip residual for the opaque-coefficient chain: integrate the
/// linearized equation, then drive the printed variant with the
/// reconstructed solution on every grid node.
fn bench_roundtrip(c: &mut Criterion) {
    let mut group = c.benchmark_group("roundtrip-residual");
    for n in [1_usize, 3] {
        let params = ChainParams::opaque(n, rat_int(1)).unwrap();
        let names: Vec<String> = (0..=n).map(|i| format!("a{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let table = SymbolTable::random(&refs, 3, &mut rng);
        let num = NumericSettings { x0: 0.0, init: None, length: 0.8, step: 2e-4 };
        for (label, par) in modes() {
            group.bench_with_input(BenchmarkId::new(format!("n{n}"), label), &par, |b, &par| {
                b.iter(|| riccati_residual(&params, &table, &num, par).unwrap());
            });
        }
    }
    group.finish();
}

/// Schwarzian of the solution ratio against the closed form, the
/// heaviest per-node kernel (cubic spline jets at every interior node).
fn bench_ratio(c: &mut Criterion) {
    let mut group = c.benchmark_group("solution-ratio");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let table = SymbolTable::random(&["a0", "a1"], 3, &mut rng);
    let p = table.substitute_into(&riccati_schwarz::expr::Expr::sym("a1"));
    let q = table.substitute_into(&riccati_schwarz::expr::Expr::sym("a0"));
    for (label, par) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            b.iter(|| ratio_schwarzian(&p, &q, 0.0, 1.0, 1e-4, par).unwrap());
        });
    }
    group.finish();
}

/// The four-case identity suite; cases are independent and dispatched
/// as one batch.
fn bench_identity_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("identity-suite");
    group.sample_size(20);
    for (label, par) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            b.iter(|| identity_suite(0, par).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_roundtrip, bench_ratio, bench_identity_suite);
criterion_main!(benches);
