//! Link Hilbert space of a pure gauge lattice, gauge transformations and the
//! projector onto the gauge-invariant subspace.
//!
//! The computational basis is labelled by one group element per link, stored
//! as a mixed-radix integer with link 0 most significant. A gauge
//! transformation assigns `g_x` to every site and acts on a link `ℓ` running
//! from `tail` to `head` as `u_ℓ ↦ g_tail · u_ℓ · g_head⁻¹`, so it permutes
//! basis states.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::group::{FiniteGroup, GroupElement, GroupError, WordSampler};
use crate::linalg::{self, hermitian_eig, overlap, tol, ComplexMatrix, LinalgError, StateVector};

/// Largest basis dimension accepted unless a model is built with an explicit cap.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest number of gauge transformations summed when building a projector.
pub const MAX_PROJECTOR_TRANSFORMS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("lattice needs at least one site")]
    NoSites,
    #[error("link {link} references site {site}, but the lattice has {num_sites} sites")]
    InvalidSite {
        link: usize,
        site: usize,
        num_sites: usize,
    },
    #[error("basis dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: String, cap: usize },
    #[error("expected {expected} entries, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("{count} gauge transformations exceed the exhaustive-sum limit of {limit}")]
    TooManyTransforms { count: String, limit: usize },
    #[error("projector eigenvalue {0} is neither near 0 nor near 1")]
    AmbiguousProjector(f64),
    #[error("projector rank {rank} disagrees with the recovered basis size {basis}")]
    RankMismatch { rank: usize, basis: usize },
}

pub type Result<T> = std::result::Result<T, LatticeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub tail: usize,
    pub head: usize,
}

/// Sites, oriented links and the gauge group living on them.
#[derive(Debug, Clone)]
pub struct LatticeModel {
    num_sites: usize,
    links: Vec<Link>,
    group: Arc<FiniteGroup>,
    dim: usize,
}

impl LatticeModel {
    pub fn new(
        group: Arc<FiniteGroup>,
        num_sites: usize,
        links: Vec<(usize, usize)>,
    ) -> Result<Self> {
        Self::with_dim_cap(group, num_sites, links, DEFAULT_DIM_CAP)
    }

    pub fn with_dim_cap(
        group: Arc<FiniteGroup>,
        num_sites: usize,
        links: Vec<(usize, usize)>,
        cap: usize,
    ) -> Result<Self> {
        if num_sites == 0 {
            return Err(LatticeError::NoSites);
        }
        let links: Vec<Link> = links
            .into_iter()
            .map(|(tail, head)| Link { tail, head })
            .collect();
        for (i, l) in links.iter().enumerate() {
            for site in [l.tail, l.head] {
                if site >= num_sites {
                    return Err(LatticeError::InvalidSite {
                        link: i,
                        site,
                        num_sites,
                    });
                }
            }
        }
        let dim = checked_power(group.order(), links.len())
            .filter(|&d| d <= cap)
            .ok_or_else(|| LatticeError::DimensionCap {
                dim: format!("{}^{}", group.order(), links.len()),
                cap,
            })?;
        Ok(Self {
            num_sites,
            links,
            group,
            dim,
        })
    }

    /// Two sites joined by two opposite links: `a: 0→1`, `b: 1→0`.
    pub fn two_link_plaquette(group: Arc<FiniteGroup>) -> Result<Self> {
        Self::new(group, 2, vec![(0, 1), (1, 0)])
    }

    /// Infer the site count from an edge list.
    pub fn from_edges(group: Arc<FiniteGroup>, links: Vec<(usize, usize)>) -> Result<Self> {
        let num_sites = links.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Self::new(group, num_sites, links)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn group_arc(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// `|G|^L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|G|^V`, if it fits in a `usize`.
    pub fn num_transforms(&self) -> Option<usize> {
        checked_power(self.group.order(), self.num_sites)
    }

    /// Mixed-radix index of a link configuration, link 0 most significant.
    pub fn basis_index(&self, config: &[GroupElement]) -> Result<usize> {
        if config.len() != self.links.len() {
            return Err(LatticeError::WrongLength {
                expected: self.links.len(),
                found: config.len(),
            });
        }
        let n = self.group.order();
        config.iter().try_fold(0usize, |acc, &u| {
            self.group.element(u.0)?;
            Ok(acc * n + u.0)
        })
    }

    pub fn basis_config(&self, index: usize) -> Vec<GroupElement> {
        debug_assert!(index < self.dim);
        let n = self.group.order();
        let mut config = vec![GroupElement(0); self.links.len()];
        let mut rest = index;
        for slot in config.iter_mut().rev() {
            *slot = GroupElement(rest % n);
            rest /= n;
        }
        config
    }

    /// Ordered product of link elements along a closed path, given as link
    /// indices with a traversal direction (`true` = along the orientation).
    pub fn holonomy(&self, config: &[GroupElement], path: &[(usize, bool)]) -> GroupElement {
        let g = &self.group;
        path.iter().fold(g.identity(), |acc, &(l, forward)| {
            let u = config[l];
            g.mul(acc, if forward { u } else { g.inv(u) })
        })
    }

    /// Basis permutation `φ(t)`.
    pub fn gauge_permutation(&self, t: &GaugeTransform) -> BasisPermutation {
        let g = &self.group;
        let image = (0..self.dim)
            .map(|i| {
                let n = g.order();
                let mut config = self.basis_config(i);
                for (u, l) in config.iter_mut().zip(&self.links) {
                    let left = t.site_elements[l.tail];
                    let right = g.inv(t.site_elements[l.head]);
                    *u = g.mul(g.mul(left, *u), right);
                }
                config.iter().fold(0, |acc, u| acc * n + u.0)
            })
            .collect();
        BasisPermutation { image }
    }

    /// Dense matrix of `φ(t)`.
    pub fn gauge_operator(&self, t: &GaugeTransform) -> ComplexMatrix {
        self.gauge_permutation(t).to_matrix()
    }

    /// Every gauge transformation, site 0 most significant.
    pub fn transforms(&self) -> impl Iterator<Item = GaugeTransform> + '_ {
        let n = self.group.order();
        let count = self.num_transforms().unwrap_or(usize::MAX);
        (0..count).map(move |mut code| {
            let mut elems = vec![GroupElement(0); self.num_sites];
            for slot in elems.iter_mut().rev() {
                *slot = GroupElement(code % n);
                code /= n;
            }
            GaugeTransform {
                site_elements: elems,
            }
        })
    }

    /// Haar-random transformation (each site uniform and independent).
    pub fn random_transform<R: Rng + ?Sized>(&self, rng: &mut R) -> GaugeTransform {
        GaugeTransform {
            site_elements: (0..self.num_sites)
                .map(|_| self.group.sample_uniform(rng))
                .collect(),
        }
    }

    /// Transformation with each site element drawn as a random generator word.
    pub fn word_transform<R: Rng + ?Sized>(
        &self,
        sampler: &WordSampler,
        rng: &mut R,
    ) -> GaugeTransform {
        GaugeTransform {
            site_elements: (0..self.num_sites)
                .map(|_| sampler.sample(&self.group, rng))
                .collect(),
        }
    }
}

fn checked_power(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// One group element per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaugeTransform {
    site_elements: Vec<GroupElement>,
}

impl GaugeTransform {
    pub fn new(model: &LatticeModel, site_elements: Vec<GroupElement>) -> Result<Self> {
        if site_elements.len() != model.num_sites() {
            return Err(LatticeError::WrongLength {
                expected: model.num_sites(),
                found: site_elements.len(),
            });
        }
        for e in &site_elements {
            model.group().element(e.0)?;
        }
        Ok(Self { site_elements })
    }

    pub fn identity(model: &LatticeModel) -> Self {
        Self {
            site_elements: vec![model.group().identity(); model.num_sites()],
        }
    }

    pub fn site_elements(&self) -> &[GroupElement] {
        &self.site_elements
    }

    /// Site-wise product `(self ∘ other)_x = self_x · other_x`.
    pub fn compose(&self, group: &FiniteGroup, other: &Self) -> Self {
        Self {
            site_elements: self
                .site_elements
                .iter()
                .zip(&other.site_elements)
                .map(|(&a, &b)| group.mul(a, b))
                .collect(),
        }
    }

    pub fn is_identity(&self, group: &FiniteGroup) -> bool {
        self.site_elements.iter().all(|&e| e == group.identity())
    }
}

/// A permutation of basis states: `|i⟩ ↦ |image[i]⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisPermutation {
    image: Vec<usize>,
}

impl BasisPermutation {
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(v.dim(), self.image.len());
        let mut out = StateVector::zeros(v.dim());
        for (i, &j) in self.image.iter().enumerate() {
            out[j] = v[i];
        }
        out
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.image.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &j) in self.image.iter().enumerate() {
            m[(j, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }
}

/// Orthogonal projector onto the gauge-invariant subspace.
#[derive(Debug, Clone)]
pub struct GaugeProjector {
    matrix: ComplexMatrix,
    physical_dim: usize,
    basis: Vec<StateVector>,
}

/// `P = |G|^{-V} Σ_t φ(t)`, summed exhaustively.
pub fn build_projector(model: &LatticeModel) -> Result<GaugeProjector> {
    let count = model
        .num_transforms()
        .filter(|&c| c <= MAX_PROJECTOR_TRANSFORMS)
        .ok_or_else(|| LatticeError::TooManyTransforms {
            count: format!("{}^{}", model.group().order(), model.num_sites()),
            limit: MAX_PROJECTOR_TRANSFORMS,
        })?;
    let dim = model.dim();
    // Integer hit counts keep P exactly symmetric before the single division.
    let mut hits = vec![0u32; dim * dim];
    for t in model.transforms() {
        for (i, &j) in model.gauge_permutation(&t).image().iter().enumerate() {
            hits[j * dim + i] += 1;
        }
    }
    let norm = 1.0 / count as f64;
    let matrix = ComplexMatrix::new(
        dim,
        dim,
        hits.iter()
            .map(|&h| Complex64::new(f64::from(h) * norm, 0.0))
            .collect(),
    )?;
    GaugeProjector::from_matrix(matrix)
}

impl GaugeProjector {
    /// Validates the spectrum of a candidate projector and extracts a basis of its image.
    ///
    /// Eigenvalues must sit near 0 or 1; anything in `(0.1, 0.9)` is a hard error.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eig(&matrix)?;
        let mut rank = 0;
        for &l in &eig.values {
            if l > 0.1 && l < 0.9 {
                return Err(LatticeError::AmbiguousProjector(l));
            }
            if l > 0.5 {
                if (l - 1.0).abs() > tol::NORMALIZED {
                    return Err(LatticeError::AmbiguousProjector(l));
                }
                rank += 1;
            } else if l.abs() > tol::NORMALIZED {
                return Err(LatticeError::AmbiguousProjector(l));
            }
        }
        let basis = column_basis(&matrix, rank);
        if basis.len() != rank {
            return Err(LatticeError::RankMismatch {
                rank,
                basis: basis.len(),
            });
        }
        Ok(Self {
            matrix,
            physical_dim: rank,
            basis,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    /// Orthonormal basis of the physical subspace.
    ///
    /// Built by Gram–Schmidt on the columns `P|i⟩` in basis order, so for
    /// the two-link Z₂ model it is exactly `(|00⟩+|11⟩)/√2, (|01⟩+|10⟩)/√2`.
    pub fn physical_basis(&self) -> &[StateVector] {
        &self.basis
    }

    /// Basis vectors as the columns of a `dim × physical_dim` matrix.
    pub fn basis_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.basis)
    }

    /// `P·v`, through the physical basis.
    pub fn project(&self, v: &StateVector) -> StateVector {
        self.basis
            .iter()
            .fold(StateVector::zeros(v.dim()), |acc, b| {
                let c = overlap(b, v).expect("projector dimension");
                acc.add_scaled(c, b)
            })
    }

    /// `‖P·v‖²`.
    pub fn physical_weight(&self, v: &StateVector) -> f64 {
        self.basis
            .iter()
            .map(|b| overlap(b, v).expect("projector dimension").norm_sqr())
            .sum()
    }

    /// `1 − ‖P·v‖²` for a normalized `v`, clamped at zero.
    pub fn unphysical_weight(&self, v: &StateVector) -> f64 {
        (v.norm_sqr() - self.physical_weight(v)).max(0.0)
    }

    /// `Q = I − P`.
    pub fn complement(&self) -> ComplexMatrix {
        &ComplexMatrix::identity(self.dim()) - &self.matrix
    }
}

/// Orthonormal basis of the column space of `m`, scanning columns in order.
fn column_basis(m: &ComplexMatrix, rank: usize) -> Vec<StateVector> {
    let mut basis: Vec<StateVector> = Vec::with_capacity(rank);
    for j in 0..m.cols() {
        if basis.len() == rank {
            break;
        }
        let col = m.column(j);
        let col_norm = col.norm();
        if col_norm <= tol::VECTOR {
            continue;
        }
        let mut r = col;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let c = overlap(b, &r).expect("same dimension");
                r = r.add_scaled(-c, b);
            }
        }
        if r.norm() > 1e-6 * col_norm {
            basis.push(r.normalized().expect("nonzero residual"));
        }
    }
    basis
}

/// `H = σ_x(a) + σ_x(b) + σ_z(a)σ_z(b)` on the two-link Z₂ plaquette,
/// ordered `|00⟩, |01⟩, |10⟩, |11⟩` with link `a` the high bit.
pub fn z2_two_link_hamiltonian() -> ComplexMatrix {
    use linalg::pauli::{kron, x, z};
    let id = ComplexMatrix::identity(2);
    let h = &kron(&x(), &id) + &kron(&id, &x());
    &h + &kron(&z(), &z())
}

/// Normalized `|0₊⟩, |0₋⟩, |1₊⟩, |1₋⟩` of the two-link Z₂ plaquette.
pub fn z2_two_link_states() -> [StateVector; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        StateVector::from_real(&[s, 0.0, 0.0, s]),
        StateVector::from_real(&[s, 0.0, 0.0, -s]),
        StateVector::from_real(&[0.0, s, s, 0.0]),
        StateVector::from_real(&[0.0, s, -s, 0.0]),
    ]
}
