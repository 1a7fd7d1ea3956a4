use std::hint::black_box;

use acnn_bench::fixture;
use acnn_core::capmap::{compile_chip, map_neuron};
use acnn_core::energy::{op_energy, EnergyModelCfg};
use acnn_core::sim::{run_split, simulate_op, McConfig};
use acnn_core::transient::{solve_pcg, solve_rc, PcgConfig, PcgState, RcCircuit, Source};
use acnn_core::MapSpec;
use criterion::{criterion_group, criterion_main, Criterion};

fn mapping(c: &mut Criterion) {
    let f = fixture();
    let spec = MapSpec::default();
    let w = &f.net.layers[0].weights[0];
    c.bench_function("map_neuron_64", |b| b.iter(|| map_neuron(black_box(w), 0.1, &spec)));
    c.bench_function("compile_and_quantize_chip", |b| {
        b.iter(|| compile_chip(black_box(&f.net), &spec).unwrap().quantized())
    });
}

fn simulation(c: &mut Criterion) {
    let f = fixture();
    let real = f.chip.with_seed(1).realize();
    let x = f.split.test[0].bits();
    c.bench_function("simulate_op", |b| b.iter(|| simulate_op(&real, black_box(&x), 1.5, Some(7))));
    c.bench_function("realize_chip", |b| b.iter(|| f.chip.with_seed(black_box(3)).realize()));
    let cfg = McConfig { v_peak: 1.5, iterations: 2, chip_seeds: vec![1] };
    let mut g = c.benchmark_group("montecarlo");
    g.sample_size(10);
    g.bench_function("400_samples_x2", |b| b.iter(|| run_split(&f.chip, &f.net, &f.split.test, &cfg).unwrap()));
    g.finish();
}

fn physics(c: &mut Criterion) {
    let rc = RcCircuit::new(1e3, 1e-12, Source::Sine { v: 1.0, period: 1e-7 });
    c.bench_function("solve_rc_ramp", |b| b.iter(|| solve_rc(black_box(&rc), 2e-11, 5e-8).unwrap()));
    let s = PcgState { load_cap: 10e-12, ..PcgState::default() };
    let dt = 1.0 / s.resonant_frequency() / 2000.0;
    c.bench_function("solve_pcg_cycle", |b| b.iter(|| solve_pcg(black_box(&s), &PcgConfig::default(), 1, dt).unwrap()));
    let f = fixture();
    let x = f.split.test[0].bits();
    let cfg = EnergyModelCfg::default();
    c.bench_function("op_energy_behavioral", |b| {
        b.iter(|| op_energy(&f.chip, black_box(&x), 1.4, &PcgState::default(), &cfg).unwrap())
    });
}

criterion_group!(benches, mapping, simulation, physics);
criterion_main!(benches);
