use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tvci_core::densities::{build_density, DensityKind};
use tvci_core::patterns::sample_vds;
use tvci_core::phantoms::shepp_logan;
use tvci_core::solver::{solve_tv, SolverConfig};
use tvci_core::{Convention, Grid, MeasurementOp};

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    for n in [32usize, 64] {
        let grid = Grid::new(n, 2).unwrap();
        let phantom = shepp_logan(n, 2).unwrap();
        let density =
            build_density(DensityKind::OptimalFourier, &grid, Convention::Fourier).unwrap();
        let m = grid.len() / 4;
        let pattern = sample_vds(&density, m, 7).unwrap();
        let op = MeasurementOp::new(&pattern).unwrap();
        let y = op.apply(&phantom.image).unwrap();
        let cfg = SolverConfig {
            inner_iters: 200,
            outer_iters: 3,
            ..Default::default()
        };
        group.bench_with_input(
            BenchmarkId::new("tv-fourier-25pct", format!("{n}x{n}")),
            &(op, y, cfg),
            |b, (op, y, cfg)| b.iter(|| solve_tv(op, y, cfg).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_solver);
criterion_main!(benches);
