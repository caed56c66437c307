use criterion::{criterion_group, criterion_main, Criterion};
use entroflux::harness::uniqueness_probe;
use entroflux::measures::family_concentration;
use entroflux::solver::{run, Cadence};
use entroflux::{certify, InitSpec, ProbeConfig, RunOptions, TorusGrid};
use entroflux_bench::system;

fn certification(c: &mut Criterion) {
    let mut group = c.benchmark_group("certify");
    group.sample_size(10);
    for id in ["euler", "swmhd"] {
        let sys = system(id);
        group.bench_function(id, |b| b.iter(|| certify(sys.as_ref(), 1).unwrap()));
    }
    group.finish();
}

fn concentration(c: &mut Criterion) {
    let sys = system("euler");
    let spec = InitSpec::Oscillatory { state_a: vec![1.0, 0.0], state_b: vec![2.0, 0.0], frequency: 1 };
    let options = RunOptions::default().with_cadence(Cadence::Interval(0.005));
    let runs: Vec<_> = [64usize, 128, 256]
        .iter()
        .map(|&n| run(sys.as_ref(), &TorusGrid::new(1, n, 0.05, 0.9).unwrap(), &spec, &options).unwrap())
        .collect();
    c.bench_function("family_concentration/euler", |b| {
        b.iter(|| family_concentration(sys.as_ref(), &runs, 16, 4, &[10.0, 1e2, 1e3, 1e4]).unwrap())
    });
}

fn probe(c: &mut Criterion) {
    let sys = system("euler");
    let spec = InitSpec::density_wave(2, 0.05);
    let config = ProbeConfig { ladder: vec![32, 64, 128], n_reference: 1024, ..ProbeConfig::default() };
    let mut group = c.benchmark_group("probe");
    group.sample_size(10);
    group.bench_function("euler/32-128", |b| b.iter(|| uniqueness_probe(sys.as_ref(), &spec, &config).unwrap()));
    group.finish();
}

criterion_group!(benches, certification, concentration, probe);
criterion_main!(benches);
