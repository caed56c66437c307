use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use entroflux::solver::{stable_dt, step};
use entroflux::{relative_entropy, relative_flux, RunOptions, Scheme, State};
use entroflux_bench::{smooth_field, system};

fn solver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (id, n) in [("euler", 1024), ("swmhd", 64)] {
        let sys = system(id);
        let field = smooth_field(&sys, n);
        let dt = stable_dt(sys.as_ref(), &field, 0.9).unwrap();
        for scheme in [Scheme::LaxFriedrichs, Scheme::Rusanov] {
            let options = RunOptions::default().with_scheme(scheme);
            group.bench_function(format!("{id}/{n}/{}", scheme.name()), |b| {
                b.iter(|| step(sys.as_ref(), black_box(&field), dt, &options).unwrap())
            });
        }
    }
    group.finish();
}

fn relative_quantities(c: &mut Criterion) {
    let sys = system("swmhd");
    let u = State::from_column_slice(&[1.2, 0.3, -0.1, 0.4, 0.2]);
    let big_u = State::from_column_slice(&[0.9, -0.2, 0.1, 0.3, -0.4]);
    c.bench_function("relative_entropy/swmhd", |b| {
        b.iter(|| relative_entropy(sys.as_ref(), black_box(&u), black_box(&big_u)).unwrap())
    });
    c.bench_function("relative_flux/swmhd", |b| {
        b.iter(|| relative_flux(sys.as_ref(), 1, black_box(&u), black_box(&big_u)).unwrap())
    });
}

criterion_group!(benches, solver_step, relative_quantities);
criterion_main!(benches);
