use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mixedreg_bench::smooth_inputs;
use mixedreg_core::fem::assemble_operator;
use mixedreg_core::presets::spec_with;
use mixedreg_core::{build_disk_mesh, gagliardo, FEField, FemSpace, FieldRole};

fn assembly(c: &mut Criterion) {
    let spec = spec_with(&[]);
    let mut group = c.benchmark_group("assembly");
    for level in [3, 5] {
        let space = FemSpace::new(build_disk_mesh(level).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(level), &space, |b, s| {
            b.iter(|| assemble_operator(s, &spec).unwrap())
        });
    }
    group.finish();
}

fn state_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("state_solve");
    group.sample_size(10);
    for level in [3, 5] {
        let (model, u, v) = smooth_inputs(level);
        group.bench_function(BenchmarkId::from_parameter(level), |b| {
            b.iter(|| model.solve_state(&u, &v, None).unwrap())
        });
    }
    group.finish();
}

fn seminorm(c: &mut Criterion) {
    let mut group = c.benchmark_group("gagliardo");
    group.sample_size(10);
    for level in [4, 6] {
        let mesh = build_disk_mesh(level).unwrap();
        let v = FEField::interpolate(&mesh, FieldRole::Boundary, |[x, _]| x);
        group.bench_function(BenchmarkId::from_parameter(level), |b| {
            b.iter(|| gagliardo(&mesh, &v, 0.5, 2.0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, state_solve, seminorm);
criterion_main!(benches);
