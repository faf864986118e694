use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dncouple_bench::patch_problem;
use dncouple_core::elasticity::assemble;
use dncouple_core::manufactured::{sine_field, sine_forcing};
use dncouple_core::recovery::{recover_jacobian, RecoveryRegion};
use dncouple_core::{DnSolver, Field, LameParams};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    let lame = LameParams::default();
    for n in [25, 50, 100] {
        let mesh = patch_problem(n, n).meshes.slave;
        let load = sine_forcing(lame);
        group.bench_with_input(BenchmarkId::from_parameter(n), &mesh, |b, mesh| {
            b.iter(|| assemble(black_box(mesh), lame, &load).unwrap())
        });
    }
    group.finish();
}

fn recovery(c: &mut Criterion) {
    let mut group = c.benchmark_group("recover_interface_jacobian");
    for n in [25, 100] {
        let mesh = patch_problem(n, n).meshes.slave;
        let region = RecoveryRegion::for_interface(&mesh).unwrap();
        let field = Field::interpolate(&mesh, &sine_field());
        group.bench_with_input(BenchmarkId::from_parameter(n), &field, |b, field| {
            b.iter(|| recover_jacobian(&mesh, black_box(field), &region).unwrap())
        });
    }
    group.finish();
}

fn coupled_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("dn_patch_test");
    group.sample_size(10);
    for (ns, nm) in [(12, 12), (12, 24)] {
        group.bench_function(format!("{ns}x{nm}"), |b| {
            b.iter(|| {
                let solver = DnSolver::new(patch_problem(ns, nm)).unwrap();
                solver.solve(0.7, 1e-6, 500, None, false).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, recovery, coupled_solve);
criterion_main!(benches);
