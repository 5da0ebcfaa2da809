use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quasidim::generate::{generate_mu, GeneratorSpec};
use quasidim::solver::solve_normalized;
use quasidim::spectral::Spectral;
use quasidim::{GridSpec, SolverOptions};

fn beurling(c: &mut Criterion) {
    let mut g = c.benchmark_group("beurling");
    for n in [256usize, 512, 1024] {
        let grid = GridSpec::centered(16.0, n).unwrap();
        let sp = Spectral::new(&grid);
        let mu = generate_mu(&grid, &GeneratorSpec::default(), 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| sp.beurling(mu.values()))
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for n in [256usize, 512] {
        let grid = GridSpec::centered(16.0, n).unwrap();
        let spec = GeneratorSpec {
            k: 0.3,
            ..GeneratorSpec::default()
        };
        let mu = generate_mu(&grid, &spec, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_normalized(&mu, SolverOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, beurling, solve);
criterion_main!(benches);
