//! Parallel against sequential evaluation of the data-parallel kernels.
//!
//! The sequential case runs the same code inside a one-thread pool, which is
//! what the build without the `parallel` feature does. With that feature off
//! both cases are sequential.

use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use waveguide_mps::model::build_terms;
use waveguide_mps::mps::{TimeMode, TrotterPlan};
use waveguide_mps::oracle::{trotter_steps, DenseState};
use waveguide_mps::scattering::spectra::positive_bins;
use waveguide_mps::scattering::{inject_wavepacket, momentum_density, prepare_ground_state, EngineConfig, Wavepacket};
use waveguide_mps::{CouplingMode, ModelSpec, ScattererSpec, C64};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        (
            "sequential",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn momentum_spectrum(c: &mut Criterion) {
    let spec = ModelSpec::waveguide(129, 2, CouplingMode::Rwa).with_scatterer(ScattererSpec::qubit(0, 1.0, 0.1));
    let cfg = EngineConfig::default();
    let gs = prepare_ground_state(&spec, &cfg).unwrap();
    let packet = Wavepacket::new(-32, 10.0, PI / 2.0, 2);
    let psi = inject_wavepacket(&gs.state, &spec, &packet, &cfg.trunc().unwrap(), cfg.hard_cap).unwrap();
    let ks = positive_bins(spec.n_cav, packet.k_in);
    let mut group = c.benchmark_group("momentum_density");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| momentum_density(&psi, &spec, &ks).unwrap()))
        });
    }
    group.finish();
}

fn dense_gates(c: &mut Criterion) {
    let spec = ModelSpec::waveguide(9, 2, CouplingMode::Full).with_scatterer(ScattererSpec::qubit(0, 1.0, 0.3));
    let terms = build_terms(&spec).unwrap();
    let plan = TrotterPlan::new(&terms, 0.05, TimeMode::Real).unwrap();
    let dims = terms.layout.dims.clone();
    let dim: usize = dims.iter().product();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] = C64::new(1.0, 0.0);
    let state = DenseState::new(dims, amps).unwrap();
    let mut group = c.benchmark_group("dense_trotter_step");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| trotter_steps(&plan, &state, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, momentum_spectrum, dense_gates);
criterion_main!(benches);
