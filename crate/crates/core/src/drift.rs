//! Coherent gauge-drift unitaries and their block structure relative to the
//! physical subspace.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{z2_two_link_states, GaugeProjector};
use crate::linalg::{expm_i_hermitian, ComplexMatrix, LinalgError};

/// Longest expansion [`first_appearance_expansion`] will build.
pub const MAX_EXPANSION_STEPS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("drift epsilon {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("drift amplitude must be positive and finite, got {0}")]
    BadAmplitude(f64),
    #[error("operator dimension {found} does not match projector dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expansion limited to {MAX_EXPANSION_STEPS} steps, asked for {0}")]
    TooManySteps(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, DriftError>;

/// How the drift unitary is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftSpec {
    /// Rotation by `ε` between `|0₊⟩` and `|0₋⟩` on the two-link Z₂ plaquette.
    Z2Rotation { epsilon: f64 },
    /// `exp(−i(H − PHP))` with `H` a random Hermitian matrix whose entries
    /// have real and imaginary parts in `[−amplitude, amplitude]`.
    RandomHermitian { amplitude: f64, seed: u64 },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DriftSpec::Z2Rotation { epsilon } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(DriftError::EpsilonOutOfRange(epsilon));
                }
            }
            DriftSpec::RandomHermitian { amplitude, .. } => {
                if !(amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(DriftError::BadAmplitude(amplitude));
                }
            }
        }
        Ok(())
    }
}

/// When a random drift is redrawn during an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftScope {
    /// One drift shared by every trajectory and step.
    #[default]
    Experiment,
    /// A fresh drift per trajectory, fixed across its steps.
    Trajectory,
    /// A fresh drift at every step.
    Step,
}

/// Rotation drift on the Z₂ plaquette, in the computational basis.
///
/// Maps `|0₊⟩ ↦ √(1−ε²)|0₊⟩ + ε|0₋⟩` and `|0₋⟩ ↦ −ε|0₊⟩ + √(1−ε²)|0₋⟩`,
/// and is the identity on `|1₊⟩, |1₋⟩`.
pub fn z2_rotation_drift(epsilon: f64) -> Result<ComplexMatrix> {
    DriftSpec::Z2Rotation { epsilon }.validate()?;
    let c = Complex64::new((1.0 - epsilon * epsilon).sqrt(), 0.0);
    let e = Complex64::new(epsilon, 0.0);
    let [zp, zm, op, om] = z2_two_link_states();
    let terms = [
        (c, &zp, &zp),
        (e, &zm, &zp),
        (-e, &zp, &zm),
        (c, &zm, &zm),
        (Complex64::new(1.0, 0.0), &op, &op),
        (Complex64::new(1.0, 0.0), &om, &om),
    ];
    Ok(terms
        .iter()
        .fold(ComplexMatrix::zeros(4, 4), |acc, (s, ket, bra)| {
            &acc + &ComplexMatrix::outer(ket, bra).scale(*s)
        }))
}

/// `(M + M†)/2` for `M` with independent `Re, Im ~ U[−a, a]` entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, amplitude: f64, rng: &mut R) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re = rng.random_range(-amplitude..=amplitude);
        let im = rng.random_range(-amplitude..=amplitude);
        Complex64::new(re, im)
    });
    let half = Complex64::new(0.5, 0.0);
    (&m + &m.adjoint()).scale(half)
}

/// `H − PHP`: removes the part of `H` acting inside the physical subspace.
pub fn unphysical_part(h: &ComplexMatrix, projector: &GaugeProjector) -> Result<ComplexMatrix> {
    if h.rows() != projector.dim() || !h.is_square() {
        return Err(DriftError::DimensionMismatch {
            expected: projector.dim(),
            found: h.rows(),
        });
    }
    let b = projector.basis_matrix();
    let b_dag = b.adjoint();
    let inner = &(&b_dag * h) * &b;
    let php = &(&b * &inner) * &b_dag;
    Ok(h - &php)
}

/// Generator `H − PHP` of a random drift, drawn from `rng`.
pub fn random_drift_generator<R: Rng + ?Sized>(
    projector: &GaugeProjector,
    amplitude: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    DriftSpec::RandomHermitian { amplitude, seed: 0 }.validate()?;
    let h = random_hermitian(projector.dim(), amplitude, rng);
    unphysical_part(&h, projector)
}

/// Random drift `exp(−i(H − PHP))`, reproducible from `seed`.
pub fn random_drift(
    projector: &GaugeProjector,
    amplitude: f64,
    seed: u64,
) -> Result<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_drift_from_rng(projector, amplitude, &mut rng)
}

pub fn random_drift_from_rng<R: Rng + ?Sized>(
    projector: &GaugeProjector,
    amplitude: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let gen = random_drift_generator(projector, amplitude, rng)?;
    Ok(expm_i_hermitian(&gen, -1.0)?)
}

/// `U = A + εV` split: `A` preserves the physical and unphysical subspaces,
/// `εV` maps between them.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// `A = PUP + QUQ`.
    pub block_diagonal: ComplexMatrix,
    /// `εV = PUQ + QUP`.
    pub off_block: ComplexMatrix,
    /// Spectral norm of `off_block`.
    pub epsilon_est: f64,
}

pub fn block_decompose(
    u: &ComplexMatrix,
    projector: &GaugeProjector,
) -> Result<BlockDecomposition> {
    if !u.is_square() || u.rows() != projector.dim() {
        return Err(DriftError::DimensionMismatch {
            expected: projector.dim(),
            found: u.rows(),
        });
    }
    let p = projector.matrix();
    let q = projector.complement();
    let off_block = &(&(p * u) * &q) + &(&(&q * u) * p);
    // A + εV reproduces U up to one rounding per entry.
    let block_diagonal = u - &off_block;
    let epsilon_est = off_block.spectral_norm()?;
    Ok(BlockDecomposition {
        block_diagonal,
        off_block,
        epsilon_est,
    })
}

/// Terms of `U^n` grouped by the step at which `εV` first acts:
/// `A^k (εV) U^{n−1−k}` for `k = 0..n`, followed by `A^n`.
pub fn first_appearance_expansion(
    u: &ComplexMatrix,
    projector: &GaugeProjector,
    n: usize,
) -> Result<Vec<ComplexMatrix>> {
    if n > MAX_EXPANSION_STEPS {
        return Err(DriftError::TooManySteps(n));
    }
    let parts = block_decompose(u, projector)?;
    let a = &parts.block_diagonal;
    let dim = u.rows();
    let mut terms = Vec::with_capacity(n + 1);
    let mut a_pow = ComplexMatrix::identity(dim);
    for k in 0..n {
        let tail = u.pow(n - 1 - k)?;
        terms.push(&(&a_pow * &parts.off_block) * &tail);
        a_pow = &a_pow * a;
    }
    terms.push(a_pow);
    Ok(terms)
}
