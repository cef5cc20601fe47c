use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vibrelevel::refdata::Column;
use vibrelevel::{
    calibrate_h, cfm_propagate, make_morse, make_power_tail, numerov_propagate, reference_table,
    sed_sequence, solve_spectrum, Direction, Engine, GridConfig, HSource, Mapping, MorseParams,
    RadialGrid, SolverConfig, Wall,
};

fn propagation(c: &mut Criterion) {
    // harmonic oscillator, E = 1 (ground state)
    let grid = RadialGrid::new(-8.0, 8.0, 4000, Mapping::Uniform).unwrap();
    c.bench_function("numerov_4000_steps", |b| {
        b.iter(|| numerov_propagate(|x| x * x - 1.0, black_box(&grid), 0.0, 1e-12, Direction::Outward).unwrap())
    });
    let p = make_morse(MorseParams { de: 1000.0, a: 1.0, re: 3.0 }).unwrap();
    let cfg = GridConfig::default();
    c.bench_function("cfm_morse_one_energy", |b| {
        b.iter(|| cfm_propagate(&p, 10.0, black_box(-500.0), 3.0, &cfg).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    let morse = make_morse(MorseParams { de: 1000.0, a: 1.0, re: 3.0 }).unwrap();
    let tail = make_power_tail(3, 1e4, Some(Wall { m: 6, cm: 1e5 })).unwrap();
    let cfg = SolverConfig::default();
    for engine in [Engine::Cfm, Engine::Numerov] {
        g.bench_function(format!("morse_{engine}"), |b| {
            b.iter(|| solve_spectrum(&morse, 10.0, engine, &cfg).unwrap())
        });
    }
    g.bench_function("power_tail_cfm", |b| {
        b.iter(|| solve_spectrum(&tail, 11.494_888_5, Engine::Cfm, &cfg).unwrap())
    });
    g.finish();
}

fn sed(c: &mut Criterion) {
    let t = reference_table();
    let lv = t.energies(Column::Reference);
    c.bench_function("sed_table", |b| {
        b.iter(|| {
            let h = calibrate_h(black_box(&lv), 1.0 / 6.0, 2, 0.9566).unwrap();
            sed_sequence(&lv, 1.0 / 6.0, h, HSource::Explicit).unwrap()
        })
    });
}

criterion_group!(benches, propagation, spectra, sed);
criterion_main!(benches);
