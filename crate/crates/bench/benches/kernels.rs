use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use gauge_drift::drift::{random_drift, random_drift_generator};
use gauge_drift::linalg::{expm_i_apply_series, hermitian_eig};
use gauge_drift::{
    build_projector, DriftScope, DriftSpec, Experiment, ExperimentConfig, FiniteGroup,
    LatticeModel, Mode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn d3() -> Arc<LatticeModel> {
    let g: FiniteGroup = "d3".parse().unwrap();
    Arc::new(LatticeModel::two_link_plaquette(Arc::new(g)).unwrap())
}

fn kernels(c: &mut Criterion) {
    let model = d3();
    let projector = build_projector(&model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let gen = random_drift_generator(&projector, 0.01, &mut rng).unwrap();
    let psi = projector.physical_basis()[0].clone();

    c.bench_function("build_projector d3", |b| {
        b.iter(|| build_projector(black_box(&model)).unwrap())
    });
    c.bench_function("hermitian_eig 36x36", |b| {
        b.iter(|| hermitian_eig(black_box(&gen)).unwrap())
    });
    c.bench_function("random_drift d3", |b| {
        b.iter(|| random_drift(&projector, 0.01, black_box(3)).unwrap())
    });
    c.bench_function("drift generator + series step d3", |b| {
        b.iter(|| {
            let h = random_drift_generator(&projector, 0.01, &mut rng).unwrap();
            expm_i_apply_series(&h, -1.0, black_box(&psi)).unwrap()
        })
    });
}

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_trajectory d3 200 steps");
    for (label, scope) in [
        ("fixed drift", DriftScope::Trajectory),
        ("per-step drift", DriftScope::Step),
    ] {
        let mut cfg = ExperimentConfig::new(
            d3(),
            DriftSpec::RandomHermitian {
                amplitude: 0.01,
                seed: 0,
            },
            Mode::Haar,
        );
        cfg.drift_scope = scope;
        cfg.steps = 200;
        let exp = Experiment::new(cfg).unwrap();
        group.bench_function(label, |b| {
            b.iter(|| exp.run_trajectory(black_box(0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, trajectories);
criterion_main!(benches);
