//! Rayon vs sequential comparison for the data-parallel hot paths:
//! operator assembly (rows), the derivative tower (transposed matvecs) and a
//! small PDE-residual point sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use blowlab_core::contour::{build_grid_with_policy, GridPolicy};
use blowlab_core::kernel::KernelOperator;
use blowlab_core::scattering::{LogFamily, ProfileKind, ScatteringProfile};
use blowlab_core::series::{derivative_table, Mode};
use blowlab_core::verify::pde_residual;
use blowlab_core::set_parallel;

fn profile() -> ScatteringProfile {
    ScatteringProfile::build(
        ProfileKind::Unbounded { delta: 0.25 },
        1.0,
        0.0,
        LogFamily::none(),
        None,
    )
    .unwrap()
}

fn bench_assemble(c: &mut Criterion) {
    let p = profile();
    let policy = GridPolicy::for_window(0.0, 5.0);
    let grid = build_grid_with_policy(&p, 0.9, 1e-10, 3, &policy).unwrap();
    let mut group = c.benchmark_group("assemble");
    for &parallel in &[false, true] {
        group.bench_with_input(
            BenchmarkId::from_parameter(if parallel { "rayon" } else { "sequential" }),
            &parallel,
            |b, &par| {
                set_parallel(par);
                b.iter(|| KernelOperator::assemble(&p, &grid, 1.3, 0.9).unwrap());
            },
        );
    }
    group.finish();
    set_parallel(true);
}

fn bench_tower(c: &mut Criterion) {
    let p = profile();
    let policy = GridPolicy::for_window(0.0, 5.0);
    let grid = build_grid_with_policy(&p, 0.9, 1e-10, 5, &policy).unwrap();
    let op = KernelOperator::assemble(&p, &grid, 1.3, 0.9).unwrap();
    let mut group = c.benchmark_group("derivative_tower_order5");
    for &parallel in &[false, true] {
        group.bench_with_input(
            BenchmarkId::from_parameter(if parallel { "rayon" } else { "sequential" }),
            &parallel,
            |b, &par| {
                set_parallel(par);
                b.iter(|| derivative_table(&op, 5, Mode::Neumann { jmax: 12 }).unwrap());
            },
        );
    }
    group.finish();
    set_parallel(true);
}

fn bench_residual_sweep(c: &mut Criterion) {
    let p = profile();
    let pts: Vec<(f64, f64)> = (0..4).map(|i| (0.5 * i as f64, 0.5 + 0.1 * i as f64)).collect();
    let mut group = c.benchmark_group("pde_residual_4pts");
    group.sample_size(10);
    for &parallel in &[false, true] {
        group.bench_with_input(
            BenchmarkId::from_parameter(if parallel { "rayon" } else { "sequential" }),
            &parallel,
            |b, &par| {
                set_parallel(par);
                b.iter(|| pde_residual(&p, &pts, 1e-8).unwrap());
            },
        );
    }
    group.finish();
    set_parallel(true);
}

criterion_group!(benches, bench_assemble, bench_tower, bench_residual_sweep);
criterion_main!(benches);
