use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use influence_bench::free_particle_network;
use influence_core::{
    integrate, simulate, ConstantRates, GapMode, IntegrationConfig, ParticleState, PotentialOrder, RateForcing,
    RateSpec, SimulationConfig, WorldlineStart,
};

fn discrete(c: &mut Criterion) {
    let rates = ConstantRates(RateSpec::new(0.02, 0.05).unwrap());
    let mut g = c.benchmark_group("simulate");
    for mode in [GapMode::Deterministic, GapMode::Stochastic] {
        let cfg = SimulationConfig::new(10_000, 7, mode);
        g.bench_function(BenchmarkId::from_parameter(format!("{mode:?}")), |b| {
            b.iter(|| simulate(&ParticleState::at_rest(), black_box(&rates), &cfg).unwrap())
        });
    }
    g.finish();
}

fn continuum(c: &mut Criterion) {
    let field = ConstantRates(RateSpec::one_sided_q(0.01).unwrap());
    let mut g = c.benchmark_group("integrate");
    for order in [PotentialOrder::Leading, PotentialOrder::Full] {
        let forcing = RateForcing { field, order };
        let cfg = IntegrationConfig { tau_span: 5_000.0, step: 5.0, renormalize: true };
        g.bench_function(BenchmarkId::from_parameter(format!("{order:?}")), |b| {
            b.iter(|| integrate(black_box(&forcing), WorldlineStart::default(), cfg).unwrap())
        });
    }
    g.finish();
}

fn network(c: &mut Criterion) {
    let mut g = c.benchmark_group("network");
    for n in [100, 1_000] {
        g.bench_with_input(BenchmarkId::new("build", n), &n, |b, &n| b.iter(|| free_particle_network(n)));
        let net = free_particle_network(n);
        g.bench_with_input(BenchmarkId::new("collinearity", n), &net, |b, net| {
            b.iter(|| net.collinearity_scan_all().unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dot", n), &net, |b, net| b.iter(|| net.to_dot()));
    }
    g.finish();
}

criterion_group!(benches, discrete, continuum, network);
criterion_main!(benches);
