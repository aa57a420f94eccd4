use std::sync::Arc;

use gauge_drift::{
    DriftScope, DriftSpec, Experiment, ExperimentConfig, FiniteGroup, LatticeModel, Mode,
};

fn d3() -> Arc<LatticeModel> {
    let g: FiniteGroup = "d3".parse().unwrap();
    Arc::new(LatticeModel::two_link_plaquette(Arc::new(g)).unwrap())
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn zeno_measurement_does_not_raise_unphysical_weight() {
    let mut cfg = ExperimentConfig::new(
        d3(),
        DriftSpec::RandomHermitian {
            amplitude: 0.02,
            seed: 4,
        },
        Mode::Zeno,
    );
    cfg.drift_scope = DriftScope::Trajectory;
    cfg.steps = 40;
    cfg.trajectories = 600;
    cfg.seed = 21;
    let exp = Experiment::new(cfg).unwrap();
    let recs = exp.run_trajectories().unwrap();
    let mut compared = 0;
    for s in 0..40 {
        let alive: Vec<_> = recs
            .iter()
            .filter(|r| r.unphysical_weight.len() > s)
            .collect();
        if alive.len() < 500 {
            continue;
        }
        let pre: Vec<f64> = alive.iter().map(|r| r.pre_measurement_weight[s]).collect();
        let post: Vec<f64> = alive.iter().map(|r| r.unphysical_weight[s]).collect();
        let (mp, sp) = mean_se(&pre);
        let (mq, sq) = mean_se(&post);
        assert!(
            mq <= mp + 3.0 * sp.hypot(sq),
            "step {s}: pre {mp:e} post {mq:e}"
        );
        compared += 1;
    }
    assert!(compared >= 10);
    // Zeno keeps the weight far below the unmitigated ε²n² growth.
    let last = recs
        .iter()
        .filter_map(|r| r.unphysical_weight.get(39))
        .copied()
        .collect::<Vec<_>>();
    assert!(mean_se(&last).0 < 0.05);
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let mut cfg = ExperimentConfig::new(
        d3(),
        DriftSpec::RandomHermitian {
            amplitude: 0.02,
            seed: 1,
        },
        Mode::Haar,
    );
    cfg.drift_scope = DriftScope::Step;
    cfg.steps = 50;
    cfg.trajectories = 16;
    let exp = Experiment::new(cfg).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| exp.run_ensemble().unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn modes_share_the_drift_sequence() {
    // The drift stream is keyed by the drift seed only.
    let base = |mode, seed| {
        let mut cfg = ExperimentConfig::new(
            d3(),
            DriftSpec::RandomHermitian {
                amplitude: 0.02,
                seed: 9,
            },
            mode,
        );
        cfg.drift_scope = DriftScope::Step;
        cfg.steps = 30;
        cfg.seed = seed;
        Experiment::new(cfg).unwrap().run_trajectory(0).unwrap()
    };
    assert_eq!(base(Mode::None, 1).survival, base(Mode::None, 2).survival);
    assert_ne!(base(Mode::Haar, 1).survival, base(Mode::Haar, 2).survival);
}
