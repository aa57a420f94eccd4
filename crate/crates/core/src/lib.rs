//! State-vector simulation of coherent gauge drift in finite-group lattice
//! gauge theories, and its suppression by random gauge transformations,
//! word sampling and Zeno measurements.

pub mod drift;
pub mod engine;
pub mod group;
pub mod lattice;
pub mod linalg;

pub use drift::{BlockDecomposition, DriftError, DriftScope, DriftSpec};
pub use engine::{
    fit_growth, fit_growth_window, EngineError, EnsembleStats, Experiment, ExperimentConfig,
    FitError, GrowthFit, Mode, PhysicalEvolution, StepPhase, TrajectoryRecord, ZenoOutcome,
};
pub use group::{FiniteGroup, GroupElement, GroupError, WordSampler};
pub use lattice::{
    build_projector, BasisPermutation, GaugeProjector, GaugeTransform, LatticeError, LatticeModel,
    Link,
};
pub use linalg::{ComplexMatrix, LinalgError, StateVector};
