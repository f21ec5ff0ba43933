use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gridgp::{build_preconditioner, pcg, PreconditionerKind, SorOperator};
use gridgp_bench::{matern32_kernel, rng, uniform_points, unit_grid};

fn pcg_preconditioners(c: &mut Criterion) {
    let kernel = matern32_kernel(2);
    let grid = unit_grid(8, 2);
    let x = uniform_points(256, 2, 11);
    let op = SorOperator::assemble(&kernel, grid, &x, 1e-4).unwrap();
    let g = gridgp::rng::standard_normal_vector(&mut rng(12), 256);
    let v = op.data_rhs(&g);

    let mut group = c.benchmark_group("pcg_eta8");
    group.sample_size(10);
    for kind in [
        PreconditionerKind::TwoLevelAdditiveSchwarz,
        PreconditionerKind::AdditiveSchwarz,
        PreconditionerKind::Jacobi,
    ] {
        let pre = build_preconditioner(kind, &op).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(kind.name()), &kind, |b, _| {
            b.iter(|| pcg(|w| op.apply(w), &pre, &v, 1e-3, 400, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pcg_preconditioners);
criterion_main!(benches);
