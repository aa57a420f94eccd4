//! Seeded trajectory simulation of drift with and without interleaved gauge
//! transformations, ensemble statistics and power-law growth fits.
//!
//! A step applies, in the configured order (default: Hamiltonian, drift,
//! gauge), the optional physical propagator `exp(−iHδ)`, the drift unitary
//! and the mode's gauge operation. Observables are recorded once the whole
//! step is done.
//!
//! Randomness is split into independent ChaCha streams so results do not
//! depend on thread scheduling:
//! - gauge sampling and Zeno outcomes for trajectory `i` use
//!   `seed_from_u64(seed)` on stream `i`;
//! - per-trajectory or per-step random drifts use `seed_from_u64(drift seed)`
//!   on stream `i + 1`, so every mode sees the same drift sequence;
//! - an experiment-wide random drift uses `seed_from_u64(drift seed)` on
//!   stream 0.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::drift::{
    random_drift, random_drift_from_rng, random_drift_generator, z2_rotation_drift, DriftError,
    DriftScope, DriftSpec,
};
use crate::group::WordSampler;
use crate::lattice::{
    build_projector, BasisPermutation, GaugeProjector, GaugeTransform, LatticeError, LatticeModel,
};
use crate::linalg::{
    expm_i_apply_series, expm_i_hermitian, overlap, ComplexMatrix, LinalgError, StateVector,
};

/// Lower edge of the growth-fit window.
pub const FIT_WINDOW_MIN: f64 = 1e-10;
/// Upper edge of the growth-fit window.
pub const FIT_WINDOW_MAX: f64 = 0.1;
/// Minimum number of in-window points for a growth fit.
pub const FIT_MIN_POINTS: usize = 10;

/// Branch probabilities at or below this are treated as impossible outcomes.
const ZERO_BRANCH: f64 = 1e-300;

/// Largest `|G|^V · dim` for which all gauge permutations are tabulated.
const PERMUTATION_TABLE_LIMIT: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("Zeno measurement sampled a branch of probability {0:e}")]
    ZeroBranch(f64),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// What happens in the gauge slot of a step.
#[derive(Debug, Clone)]
pub enum Mode {
    /// Drift only.
    None,
    /// Uniformly random transformation over `G^V`.
    Haar,
    /// Each site element drawn as a random generator word.
    Word(WordSampler),
    /// Ancilla-controlled random transformation followed by an X-basis
    /// measurement of the ancilla.
    Zeno,
    /// The same transformation every step.
    Fixed(GaugeTransform),
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Haar => "haar",
            Mode::Word(_) => "word",
            Mode::Zeno => "zeno",
            Mode::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPhase {
    Hamiltonian,
    Drift,
    Gauge,
}

pub const DEFAULT_ORDER: [StepPhase; 3] =
    [StepPhase::Hamiltonian, StepPhase::Drift, StepPhase::Gauge];

/// Physical evolution `exp(−iHδ)` applied once per step.
#[derive(Debug, Clone)]
pub struct PhysicalEvolution {
    pub hamiltonian: ComplexMatrix,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: Arc<LatticeModel>,
    pub drift: DriftSpec,
    pub drift_scope: DriftScope,
    pub steps: usize,
    pub trajectories: usize,
    pub mode: Mode,
    pub seed: u64,
    pub evolution: Option<PhysicalEvolution>,
    pub order: [StepPhase; 3],
    /// Index into the physical basis of the initial state.
    pub initial_state: usize,
}

impl ExperimentConfig {
    pub fn new(model: Arc<LatticeModel>, drift: DriftSpec, mode: Mode) -> Self {
        Self {
            model,
            drift,
            drift_scope: DriftScope::default(),
            steps: 100,
            trajectories: 1,
            mode,
            seed: 0,
            evolution: None,
            order: DEFAULT_ORDER,
            initial_state: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum DriftSource {
    Fixed(ComplexMatrix),
    PerTrajectory { amplitude: f64, seed: u64 },
    PerStep { amplitude: f64, seed: u64 },
}

/// A validated experiment with everything precomputed that trajectories share.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    projector: GaugeProjector,
    initial: StateVector,
    propagator: Option<ComplexMatrix>,
    drift: DriftSource,
    permutations: Option<Vec<BasisPermutation>>,
    fixed_permutation: Option<BasisPermutation>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let projector = build_projector(&config.model)?;
        Self::with_projector(config, projector)
    }

    /// Reuses an already built projector for `config.model`.
    pub fn with_projector(config: ExperimentConfig, projector: GaugeProjector) -> Result<Self> {
        let model = &config.model;
        let dim = model.dim();
        if projector.dim() != dim {
            return Err(EngineError::Invalid(format!(
                "projector dimension {} does not match model dimension {dim}",
                projector.dim()
            )));
        }
        if config.steps == 0 {
            return Err(EngineError::Invalid("steps must be at least 1".into()));
        }
        if config.trajectories == 0 {
            return Err(EngineError::Invalid(
                "trajectories must be at least 1".into(),
            ));
        }
        let mut phases = config.order.to_vec();
        phases.sort_by_key(|p| *p as u8);
        phases.dedup();
        if phases.len() != 3 {
            return Err(EngineError::Invalid(
                "step order must list hamiltonian, drift and gauge once each".into(),
            ));
        }
        let initial = projector
            .physical_basis()
            .get(config.initial_state)
            .cloned()
            .ok_or_else(|| {
                EngineError::Invalid(format!(
                    "initial_state {} out of range for {} physical states",
                    config.initial_state,
                    projector.physical_dim()
                ))
            })?;

        config.drift.validate()?;
        let drift = match (config.drift, config.drift_scope) {
            (DriftSpec::Z2Rotation { epsilon }, _) => {
                let u = z2_rotation_drift(epsilon)?;
                if u.rows() != dim {
                    return Err(EngineError::Invalid(format!(
                        "z2_rotation drift acts on 4 states, model has {dim}"
                    )));
                }
                DriftSource::Fixed(u)
            }
            (DriftSpec::RandomHermitian { amplitude, seed }, DriftScope::Experiment) => {
                DriftSource::Fixed(random_drift(&projector, amplitude, seed)?)
            }
            (DriftSpec::RandomHermitian { amplitude, seed }, DriftScope::Trajectory) => {
                DriftSource::PerTrajectory { amplitude, seed }
            }
            (DriftSpec::RandomHermitian { amplitude, seed }, DriftScope::Step) => {
                DriftSource::PerStep { amplitude, seed }
            }
        };

        let propagator = match &config.evolution {
            None => None,
            Some(ev) => {
                let h = &ev.hamiltonian;
                if h.rows() != dim || !h.is_square() {
                    return Err(EngineError::Invalid(format!(
                        "Hamiltonian is {}x{}, model dimension is {dim}",
                        h.rows(),
                        h.cols()
                    )));
                }
                if !(ev.dt.is_finite()) {
                    return Err(EngineError::Invalid("dt must be finite".into()));
                }
                Some(expm_i_hermitian(
                    &h.scale(Complex64::new(ev.dt, 0.0)),
                    -1.0,
                )?)
            }
        };

        let permutations = match model.num_transforms() {
            Some(n) if n.saturating_mul(dim) <= PERMUTATION_TABLE_LIMIT => Some(
                model
                    .transforms()
                    .map(|t| model.gauge_permutation(&t))
                    .collect(),
            ),
            _ => None,
        };
        let fixed_permutation = match &config.mode {
            Mode::Fixed(t) => {
                GaugeTransform::new(model, t.site_elements().to_vec())?;
                Some(model.gauge_permutation(t))
            }
            _ => None,
        };

        Ok(Self {
            config,
            projector,
            initial,
            propagator,
            drift,
            permutations,
            fixed_permutation,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn projector(&self) -> &GaugeProjector {
        &self.projector
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    fn permutation_for(&self, t: &GaugeTransform) -> BasisPermutation {
        match &self.permutations {
            Some(table) => {
                let n = self.config.model.group().order();
                let code = t.site_elements().iter().fold(0, |acc, e| acc * n + e.0);
                table[code].clone()
            }
            None => self.config.model.gauge_permutation(t),
        }
    }

    fn apply_transform(&self, t: &GaugeTransform, state: &StateVector) -> StateVector {
        match &self.permutations {
            Some(table) => {
                let n = self.config.model.group().order();
                let code = t.site_elements().iter().fold(0, |acc, e| acc * n + e.0);
                table[code].apply(state)
            }
            None => self.config.model.gauge_permutation(t).apply(state),
        }
    }

    /// Runs trajectory `index`; deterministic in `(seed, drift seed, index)`.
    pub fn run_trajectory(&self, index: usize) -> Result<TrajectoryRecord> {
        let cfg = &self.config;
        let model = &cfg.model;
        let mut gauge_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        gauge_rng.set_stream(index as u64);

        let mut drift_rng = None;
        let trajectory_drift;
        let drift_matrix: Option<&ComplexMatrix> = match &self.drift {
            DriftSource::Fixed(u) => Some(u),
            DriftSource::PerTrajectory { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(index as u64 + 1);
                trajectory_drift = random_drift_from_rng(&self.projector, *amplitude, &mut rng)?;
                Some(&trajectory_drift)
            }
            DriftSource::PerStep { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(index as u64 + 1);
                drift_rng = Some(rng);
                None
            }
        };

        let mut state = self.initial.clone();
        let mut record = TrajectoryRecord::with_capacity(cfg.steps);
        for step in 0..cfg.steps {
            let mut failed = false;
            for phase in cfg.order {
                match phase {
                    StepPhase::Hamiltonian => {
                        if let Some(u) = &self.propagator {
                            state = u.apply(&state)?;
                        }
                    }
                    StepPhase::Drift => {
                        state = match (drift_matrix, &mut drift_rng, &self.drift) {
                            (Some(u), _, _) => u.apply(&state)?,
                            (None, Some(rng), DriftSource::PerStep { amplitude, .. }) => {
                                let gen = random_drift_generator(&self.projector, *amplitude, rng)?;
                                expm_i_apply_series(&gen, -1.0, &state)?
                            }
                            _ => unreachable!("drift source without matrix or stream"),
                        };
                    }
                    StepPhase::Gauge => match &cfg.mode {
                        Mode::None => {}
                        Mode::Haar => {
                            let t = model.random_transform(&mut gauge_rng);
                            state = self.apply_transform(&t, &state);
                        }
                        Mode::Word(sampler) => {
                            let t = model.word_transform(sampler, &mut gauge_rng);
                            state = self.apply_transform(&t, &state);
                        }
                        Mode::Fixed(_) => {
                            let perm = self.fixed_permutation.as_ref().expect("fixed permutation");
                            state = perm.apply(&state);
                        }
                        Mode::Zeno => {
                            let t = model.random_transform(&mut gauge_rng);
                            let perm = self.permutation_for(&t);
                            record
                                .pre_measurement_weight
                                .push(self.projector.unphysical_weight(&state));
                            let (next, outcome) = zeno_step(&state, &perm, &mut gauge_rng)?;
                            state = next;
                            if outcome == ZenoOutcome::Fail {
                                failed = true;
                            }
                        }
                    },
                }
                if failed {
                    break;
                }
            }
            if failed {
                record.failed_at = Some(step);
                record.pre_measurement_weight.pop();
                break;
            }
            record
                .survival
                .push(overlap(&self.initial, &state)?.norm_sqr());
            record
                .unphysical_weight
                .push(self.projector.unphysical_weight(&state));
        }
        record.final_state = state;
        Ok(record)
    }

    /// All trajectories, in index order. Parallel over the current rayon pool.
    pub fn run_trajectories(&self) -> Result<Vec<TrajectoryRecord>> {
        (0..self.config.trajectories)
            .into_par_iter()
            .map(|i| self.run_trajectory(i))
            .collect()
    }

    pub fn run_ensemble(&self) -> Result<EnsembleStats> {
        let records = self.run_trajectories()?;
        Ok(EnsembleStats::from_records(&records, self.config.steps))
    }
}

/// Per-step observables of one trajectory.
///
/// If a Zeno measurement fails, recording stops: the vectors hold only the
/// steps completed before the failing one.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// `|⟨ψ(0)|ψ(step)⟩|²`.
    pub survival: Vec<f64>,
    /// `1 − ‖Pψ(step)‖²`.
    pub unphysical_weight: Vec<f64>,
    /// Zeno mode only: unphysical weight just before each passed measurement.
    pub pre_measurement_weight: Vec<f64>,
    /// Step (0-based) at which a Zeno measurement failed.
    pub failed_at: Option<usize>,
    pub final_state: StateVector,
}

impl TrajectoryRecord {
    fn with_capacity(steps: usize) -> Self {
        Self {
            survival: Vec::with_capacity(steps),
            unphysical_weight: Vec::with_capacity(steps),
            pre_measurement_weight: Vec::new(),
            failed_at: None,
            final_state: StateVector::zeros(0),
        }
    }

    pub fn zeno_failures(&self) -> usize {
        usize::from(self.failed_at.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZenoOutcome {
    Pass,
    Fail,
}

/// Both outcomes of the controlled-transformation measurement.
#[derive(Debug, Clone)]
pub struct ZenoBranches {
    /// `(I + φ)/2 · ψ`, unnormalized.
    pub pass_branch: StateVector,
    /// `(I − φ)/2 · ψ`, unnormalized.
    pub fail_branch: StateVector,
    pub pass_probability: f64,
    pub fail_probability: f64,
}

/// Ancilla in `(|0⟩+|1⟩)/√2`, controlled `φ(t)`, then an X measurement:
/// the `|±⟩` outcomes leave the system in `(I ± φ)/2 · ψ`.
pub fn zeno_branches(state: &StateVector, phi: &BasisPermutation) -> ZenoBranches {
    // Joint state (ψ|0⟩ + φψ|1⟩)/√2, projected on |±⟩ = (|0⟩ ± |1⟩)/√2.
    let moved = phi.apply(state);
    let half = Complex64::new(0.5, 0.0);
    let pass_branch = state
        .add_scaled(Complex64::new(1.0, 0.0), &moved)
        .scale(half);
    let fail_branch = state
        .add_scaled(Complex64::new(-1.0, 0.0), &moved)
        .scale(half);
    let total = state.norm_sqr();
    ZenoBranches {
        pass_probability: pass_branch.norm_sqr() / total,
        fail_probability: fail_branch.norm_sqr() / total,
        pass_branch,
        fail_branch,
    }
}

/// Samples the measurement and returns the renormalized post-measurement state.
pub fn zeno_step<R: Rng + ?Sized>(
    state: &StateVector,
    phi: &BasisPermutation,
    rng: &mut R,
) -> Result<(StateVector, ZenoOutcome)> {
    let b = zeno_branches(state, phi);
    let u: f64 = rng.random();
    let (branch, p, outcome) = if u < b.pass_probability {
        (b.pass_branch, b.pass_probability, ZenoOutcome::Pass)
    } else {
        (b.fail_branch, b.fail_probability, ZenoOutcome::Fail)
    };
    if p <= ZERO_BRANCH {
        return Err(EngineError::ZeroBranch(p));
    }
    let next = branch.normalized().ok_or(EngineError::ZeroBranch(p))?;
    Ok((next, outcome))
}

/// Per-step ensemble averages over trajectories that have not failed.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean_survival: Vec<f64>,
    pub se_survival: Vec<f64>,
    pub mean_unphysical: Vec<f64>,
    pub se_unphysical: Vec<f64>,
    /// Fraction of all trajectories whose Zeno measurement failed at or before the step.
    pub zeno_fail_rate: Vec<f64>,
    /// Trajectories contributing at each step.
    pub alive: Vec<usize>,
    pub trajectories: usize,
}

impl EnsembleStats {
    /// Reduces records in index order, so the result is independent of how
    /// they were computed.
    pub fn from_records(records: &[TrajectoryRecord], steps: usize) -> Self {
        let mut stats = Self {
            mean_survival: Vec::with_capacity(steps),
            se_survival: Vec::with_capacity(steps),
            mean_unphysical: Vec::with_capacity(steps),
            se_unphysical: Vec::with_capacity(steps),
            zeno_fail_rate: Vec::with_capacity(steps),
            alive: Vec::with_capacity(steps),
            trajectories: records.len(),
        };
        for s in 0..steps {
            let (m, se, n) = mean_se(records.iter().filter_map(|r| r.survival.get(s).copied()));
            stats.mean_survival.push(m);
            stats.se_survival.push(se);
            stats.alive.push(n);
            let (m, se, _) = mean_se(
                records
                    .iter()
                    .filter_map(|r| r.unphysical_weight.get(s).copied()),
            );
            stats.mean_unphysical.push(m);
            stats.se_unphysical.push(se);
            let failed = records
                .iter()
                .filter(|r| r.failed_at.is_some_and(|f| f <= s))
                .count();
            stats
                .zeno_fail_rate
                .push(failed as f64 / records.len().max(1) as f64);
        }
        stats
    }

    pub fn steps(&self) -> usize {
        self.mean_survival.len()
    }
}

/// Mean and standard error (sample standard deviation over `√n`).
fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 1);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt(), n)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("only {found} points in the fit window, need at least {required}")]
    TooFewPoints { found: usize, required: usize },
}

/// Least-squares fit of `log(value) = slope · log(step) + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// First and last step (1-based) used.
    pub first_step: usize,
    pub last_step: usize,
    pub points: usize,
    /// RMS residual in log space.
    pub residual: f64,
}

/// Fits over the default window `[1e-10, 0.1]` with at least 10 points.
pub fn fit_growth(values: &[f64]) -> std::result::Result<GrowthFit, FitError> {
    fit_growth_window(values, FIT_WINDOW_MIN, FIT_WINDOW_MAX, FIT_MIN_POINTS)
}

/// `values[k]` belongs to step `k + 1`. The fit uses the first contiguous run
/// of steps whose value lies in `[lo, hi]`, i.e. the early small-amplitude
/// regime.
pub fn fit_growth_window(
    values: &[f64],
    lo: f64,
    hi: f64,
    min_points: usize,
) -> std::result::Result<GrowthFit, FitError> {
    let in_window = |v: f64| v >= lo && v <= hi;
    let start = values.iter().position(|&v| in_window(v));
    let (start, len) = match start {
        Some(s) => (s, values[s..].iter().take_while(|&&v| in_window(v)).count()),
        None => (0, 0),
    };
    if len < min_points.max(2) {
        return Err(FitError::TooFewPoints {
            found: len,
            required: min_points.max(2),
        });
    }
    let xs: Vec<f64> = (start..start + len)
        .map(|k| ((k + 1) as f64).ln())
        .collect();
    let ys: Vec<f64> = values[start..start + len].iter().map(|v| v.ln()).collect();
    let n = len as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(GrowthFit {
        slope,
        intercept,
        first_step: start + 1,
        last_step: start + len,
        points: len,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_dihedral, GroupElement};
    use crate::lattice::{z2_two_link_hamiltonian, z2_two_link_states};

    fn z2_model() -> Arc<LatticeModel> {
        Arc::new(LatticeModel::two_link_plaquette(Arc::new(make_cyclic(2).unwrap())).unwrap())
    }

    fn d3_model() -> Arc<LatticeModel> {
        Arc::new(LatticeModel::two_link_plaquette(Arc::new(make_dihedral(3).unwrap())).unwrap())
    }

    fn flip(model: &LatticeModel) -> GaugeTransform {
        GaugeTransform::new(model, vec![GroupElement(1), GroupElement(0)]).unwrap()
    }

    #[test]
    fn zero_drift_keeps_survival_at_one() {
        let model = z2_model();
        let modes = [
            Mode::None,
            Mode::Haar,
            Mode::Zeno,
            Mode::Fixed(flip(&model)),
        ];
        for mode in modes {
            let mut cfg =
                ExperimentConfig::new(model.clone(), DriftSpec::Z2Rotation { epsilon: 0.0 }, mode);
            cfg.steps = 20;
            cfg.trajectories = 3;
            let exp = Experiment::new(cfg).unwrap();
            for r in exp.run_trajectories().unwrap() {
                assert_eq!(r.failed_at, None);
                assert!(r.survival.iter().all(|&s| (s - 1.0).abs() < 1e-12));
                assert!(r.final_state.distance(exp.initial_state()) < 1e-12);
            }
        }
    }

    #[test]
    fn physical_sector_inert_d3() {
        // Gauge operations alone leave a physical state untouched.
        let model = d3_model();
        let p = build_projector(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in p.physical_basis() {
            for _ in 0..20 {
                let t = model.random_transform(&mut rng);
                assert_eq!(model.gauge_permutation(&t).apply(v).distance(v), 0.0);
            }
        }
    }

    #[test]
    fn unmitigated_z2_rotation_closed_form() {
        let eps: f64 = 0.05;
        let mut cfg = ExperimentConfig::new(
            z2_model(),
            DriftSpec::Z2Rotation { epsilon: eps },
            Mode::None,
        );
        cfg.steps = 60;
        let exp = Experiment::new(cfg).unwrap();
        let r = exp.run_trajectory(0).unwrap();
        for (k, &s) in r.survival.iter().enumerate() {
            let want = ((k + 1) as f64 * eps.asin()).cos().powi(2);
            assert!((s - want).abs() < 1e-10);
        }
    }

    #[test]
    fn haar_z2_cancels_after_nontrivial_transform() {
        // With one drift before and one after a flip, the |0₋⟩ amplitude cancels.
        let eps = 0.1;
        let model = z2_model();
        let mut cfg = ExperimentConfig::new(
            model.clone(),
            DriftSpec::Z2Rotation { epsilon: eps },
            Mode::Fixed(flip(&model)),
        );
        cfg.steps = 10;
        let exp = Experiment::new(cfg).unwrap();
        let r = exp.run_trajectory(0).unwrap();
        for (k, &s) in r.survival.iter().enumerate() {
            if k % 2 == 1 {
                assert!((s - 1.0).abs() < 1e-12);
                assert!(r.unphysical_weight[k] < 1e-12);
            } else {
                assert!((s - (1.0 - eps * eps)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_z2_cancellation_in_sampled_trajectories() {
        // Replays a Haar trajectory by hand: whenever the transform drawn
        // between two drifts is the flip, the unphysical amplitude vanishes.
        let eps = 0.1;
        let model = z2_model();
        let mut cfg = ExperimentConfig::new(
            model.clone(),
            DriftSpec::Z2Rotation { epsilon: eps },
            Mode::Haar,
        );
        cfg.steps = 40;
        cfg.seed = 17;
        let exp = Experiment::new(cfg).unwrap();
        let rec = exp.run_trajectory(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        rng.set_stream(0);
        let u = z2_rotation_drift(eps).unwrap();
        let [zp, ..] = z2_two_link_states();
        let mut state = zp.clone();
        let mut flips = Vec::new();
        for k in 0..40 {
            state = u.apply(&state).unwrap();
            let t = model.random_transform(&mut rng);
            let nontrivial = model.gauge_permutation(&t).image() != [0, 1, 2, 3];
            flips.push(nontrivial);
            state = model.gauge_permutation(&t).apply(&state);
            let d = (overlap(&zp, &state).unwrap().norm_sqr() - rec.survival[k]).abs();
            assert!(d < 1e-12, "step {k}: {d:e}");
        }
        // From a state ∝ |0₊⟩, drift · flip · drift returns to |0₊⟩.
        let mut checked = 0;
        for (k, &flipped) in flips.iter().enumerate().take(39).skip(1) {
            if rec.unphysical_weight[k - 1] < 1e-20 && flipped {
                assert!(rec.unphysical_weight[k + 1] < 1e-20);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn hamiltonian_only_matches_direct_exponentiation() {
        let model = z2_model();
        let h = z2_two_link_hamiltonian();
        let dt = 0.13;
        for mode in [Mode::None, Mode::Haar, Mode::Zeno] {
            let mut cfg =
                ExperimentConfig::new(model.clone(), DriftSpec::Z2Rotation { epsilon: 0.0 }, mode);
            cfg.steps = 50;
            cfg.evolution = Some(PhysicalEvolution {
                hamiltonian: h.clone(),
                dt,
            });
            let exp = Experiment::new(cfg).unwrap();
            let r = exp.run_trajectory(0).unwrap();
            let psi0 = exp.initial_state().clone();
            for (k, &s) in r.survival.iter().enumerate() {
                let t = (k + 1) as f64 * dt;
                let u = expm_i_hermitian(&h.scale(Complex64::new(t, 0.0)), -1.0).unwrap();
                let want = overlap(&psi0, &u.apply(&psi0).unwrap()).unwrap().norm_sqr();
                assert!((s - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn norm_is_preserved() {
        let model = d3_model();
        for scope in [
            DriftScope::Experiment,
            DriftScope::Trajectory,
            DriftScope::Step,
        ] {
            let mut cfg = ExperimentConfig::new(
                model.clone(),
                DriftSpec::RandomHermitian {
                    amplitude: 0.05,
                    seed: 2,
                },
                Mode::Haar,
            );
            cfg.drift_scope = scope;
            cfg.steps = 200;
            let exp = Experiment::new(cfg).unwrap();
            let r = exp.run_trajectory(3).unwrap();
            assert!((r.final_state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let mut cfg = ExperimentConfig::new(
            d3_model(),
            DriftSpec::RandomHermitian {
                amplitude: 0.01,
                seed: 5,
            },
            Mode::Haar,
        );
        cfg.drift_scope = DriftScope::Step;
        cfg.steps = 30;
        cfg.trajectories = 4;
        cfg.seed = 9;
        let exp = Experiment::new(cfg).unwrap();
        let a = exp.run_ensemble().unwrap();
        let b = exp.run_ensemble().unwrap();
        assert_eq!(a, b);
        let r1 = exp.run_trajectory(1).unwrap();
        let r2 = exp.run_trajectory(2).unwrap();
        assert_ne!(r1.survival, r2.survival);
    }

    #[test]
    fn single_trajectory_ensemble_equals_record() {
        let mut cfg = ExperimentConfig::new(
            d3_model(),
            DriftSpec::RandomHermitian {
                amplitude: 0.01,
                seed: 0,
            },
            Mode::Haar,
        );
        cfg.steps = 25;
        let exp = Experiment::new(cfg).unwrap();
        let rec = exp.run_trajectory(0).unwrap();
        let stats = exp.run_ensemble().unwrap();
        assert_eq!(stats.mean_survival, rec.survival);
        assert_eq!(stats.mean_unphysical, rec.unphysical_weight);
        assert!(stats.se_survival.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn config_validation() {
        let model = d3_model();
        let base = ExperimentConfig::new(
            model.clone(),
            DriftSpec::RandomHermitian {
                amplitude: 0.01,
                seed: 0,
            },
            Mode::None,
        );
        let mut c = base.clone();
        c.steps = 0;
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
        let mut c = base.clone();
        c.trajectories = 0;
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
        let mut c = base.clone();
        c.initial_state = 3;
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
        let mut c = base.clone();
        c.order = [StepPhase::Drift, StepPhase::Drift, StepPhase::Gauge];
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
        let mut c = base.clone();
        c.drift = DriftSpec::Z2Rotation { epsilon: 0.1 };
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
        let mut c = base;
        c.evolution = Some(PhysicalEvolution {
            hamiltonian: z2_two_link_hamiltonian(),
            dt: 0.1,
        });
        assert!(matches!(Experiment::new(c), Err(EngineError::Invalid(_))));
    }

    /// Z₄ two-link plaquette: the transform shifting `(a, b) ↦ (a+d, b−d)`
    /// has eigenvectors `|k, h⟩ = ½ Σ_a i^{−ka} |a, h−a⟩` with eigenvalue `i^{kd}`.
    fn z4_fixture(
        k: usize,
        h: usize,
        d: usize,
    ) -> (
        Arc<LatticeModel>,
        StateVector,
        StateVector,
        BasisPermutation,
    ) {
        let model =
            Arc::new(LatticeModel::two_link_plaquette(Arc::new(make_cyclic(4).unwrap())).unwrap());
        let eigvec = |k: usize| {
            let mut v = StateVector::zeros(16);
            for a in 0..4 {
                let b = (h + 4 - a) % 4;
                let idx = model
                    .basis_index(&[GroupElement(a), GroupElement(b)])
                    .unwrap();
                v[idx] = Complex64::from_polar(0.5, -std::f64::consts::FRAC_PI_2 * (k * a) as f64);
            }
            v
        };
        let t = GaugeTransform::new(&model, vec![GroupElement(d), GroupElement(0)]).unwrap();
        let perm = model.gauge_permutation(&t);
        (model.clone(), eigvec(0), eigvec(k), perm)
    }

    #[test]
    fn zeno_branch_probabilities() {
        use std::f64::consts::{FRAC_PI_2, PI};
        let eps: f64 = 0.2;
        for (k, d, theta) in [(2usize, 2usize, 0.0), (1, 1, FRAC_PI_2), (2, 1, PI)] {
            let (model, psi, u, perm) = z4_fixture(k, 1, d);
            let p = build_projector(&model).unwrap();
            assert!(p.unphysical_weight(&psi) < 1e-15);
            assert!((p.unphysical_weight(&u) - 1.0).abs() < 1e-12);
            let phase = Complex64::from_polar(1.0, theta);
            assert!(perm.apply(&u).distance(&u.scale(phase)) < 1e-12);

            let c = (1.0 - eps * eps).sqrt();
            let state = psi
                .scale(Complex64::new(c, 0.0))
                .add_scaled(Complex64::new(eps, 0.0), &u);
            let b = zeno_branches(&state, &perm);
            let want_fail = eps * eps * (1.0 - theta.cos()) / 2.0;
            assert!((b.fail_probability - want_fail).abs() < 1e-10);
            assert!((b.pass_probability + b.fail_probability - 1.0).abs() < 1e-12);
            let amp = overlap(&u, &b.pass_branch).unwrap();
            let want_amp = (Complex64::new(1.0, 0.0) + phase) * (eps / 2.0);
            assert!((amp - want_amp).norm() < 1e-10);
            assert!((overlap(&psi, &b.pass_branch).unwrap().re - c).abs() < 1e-12);
        }
    }

    #[test]
    fn zeno_on_physical_state_always_passes() {
        let model = d3_model();
        let p = build_projector(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = &p.physical_basis()[1];
        for t in model.transforms() {
            let (next, outcome) = zeno_step(psi, &model.gauge_permutation(&t), &mut rng).unwrap();
            assert_eq!(outcome, ZenoOutcome::Pass);
            assert!(next.distance(psi) < 1e-15);
        }
    }

    #[test]
    fn zeno_failure_stops_recording() {
        // Large rotation drift on Z₂ makes failures common.
        let mut cfg = ExperimentConfig::new(
            z2_model(),
            DriftSpec::Z2Rotation { epsilon: 0.6 },
            Mode::Zeno,
        );
        cfg.steps = 50;
        cfg.trajectories = 40;
        let exp = Experiment::new(cfg).unwrap();
        let recs = exp.run_trajectories().unwrap();
        let failed: Vec<_> = recs.iter().filter(|r| r.failed_at.is_some()).collect();
        assert!(!failed.is_empty());
        for r in &failed {
            let f = r.failed_at.unwrap();
            assert_eq!(r.survival.len(), f);
            assert_eq!(r.zeno_failures(), 1);
        }
        let stats = EnsembleStats::from_records(&recs, 50);
        assert!(stats.zeno_fail_rate.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            stats.alive[0] + recs.iter().filter(|r| r.failed_at == Some(0)).count(),
            40
        );
        let last = *stats.zeno_fail_rate.last().unwrap();
        assert!((last - failed.len() as f64 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn zeno_outcomes_on_z2_states() {
        let model = z2_model();
        let [zp, zm, ..] = z2_two_link_states();
        let perm = model.gauge_permutation(&flip(&model));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(
                zeno_step(&zp, &perm, &mut rng).unwrap().1,
                ZenoOutcome::Pass
            );
            let (next, outcome) = zeno_step(&zm, &perm, &mut rng).unwrap();
            assert_eq!(outcome, ZenoOutcome::Fail);
            assert!(next.distance(&zm) < 1e-15);
        }
    }

    #[test]
    fn fit_constant_series() {
        let fit = fit_growth(&[0.01; 30]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert_eq!((fit.first_step, fit.last_step, fit.points), (1, 30, 30));
    }

    #[test]
    fn fit_recovers_power_laws() {
        for p in [1.0, 2.0, 0.5] {
            let values: Vec<f64> = (1..=200).map(|n| 1e-6 * (n as f64).powf(p)).collect();
            let fit = fit_growth(&values).unwrap();
            assert!((fit.slope - p).abs() < 1e-12);
            assert!((fit.intercept - 1e-6f64.ln()).abs() < 1e-10);
            assert!(fit.residual < 1e-12);
        }
    }

    #[test]
    fn fit_window_and_errors() {
        // Only the leading run inside [1e-10, 0.1] is used.
        let mut values: Vec<f64> = (1..=20).map(|n| 0.01 * n as f64).collect();
        values.extend([0.05; 5]);
        let fit = fit_growth(&values).unwrap();
        assert_eq!((fit.first_step, fit.last_step), (1, 10));
        assert_eq!(
            fit_growth(&[1e-3; 9]).unwrap_err(),
            FitError::TooFewPoints {
                found: 9,
                required: 10
            }
        );
        assert_eq!(
            fit_growth(&[0.0; 50]).unwrap_err(),
            FitError::TooFewPoints {
                found: 0,
                required: 10
            }
        );
        let mut early_zero = vec![0.0; 3];
        early_zero.extend((1..=12).map(|n| 1e-4 * n as f64));
        assert_eq!(fit_growth(&early_zero).unwrap().first_step, 4);
    }
}
