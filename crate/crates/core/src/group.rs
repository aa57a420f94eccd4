//! Finite gauge groups given by explicit multiplication tables.
//!
//! Only cyclic `Z_n` and dihedral `D_n` are constructed here. Dihedral
//! elements use a fixed indexing: `0..n` are the rotations `r^k` and
//! `n..2n` are the reflections `s·r^k`, with `s r s = r⁻¹`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group order parameter must be positive")]
    ZeroOrder,
    #[error("unknown group name `{0}` (expected z<n> or d<n>)")]
    UnknownName(String),
    #[error("element index {index} out of range for group of order {order}")]
    InvalidElement { index: usize, order: usize },
    #[error("word sampler needs at least one generator")]
    NoGenerators,
    #[error(
        "generators span a subgroup of order {generated}, not the full group of order {order}"
    )]
    NotGenerating { generated: usize, order: usize },
    #[error("group axiom violated: {0}")]
    Axiom(String),
}

/// Index of an element inside its [`FiniteGroup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub usize);

impl GroupElement {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite group. Immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    /// Row-major `order × order`; entry `a*order + b` is the index of `ab`.
    mul_table: Vec<usize>,
    inv_table: Vec<usize>,
    identity: usize,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("name", &self.name)
            .field("order", &self.order)
            .finish()
    }
}

/// Builds `Z_n` with `i·j = (i + j) mod n`.
pub fn make_cyclic(n: usize) -> Result<FiniteGroup, GroupError> {
    if n == 0 {
        return Err(GroupError::ZeroOrder);
    }
    let mul_table = (0..n * n).map(|k| (k / n + k % n) % n).collect();
    FiniteGroup::from_table(format!("z{n}"), n, mul_table)
}

/// Builds `D_n`, of order `2n`.
pub fn make_dihedral(n: usize) -> Result<FiniteGroup, GroupError> {
    if n == 0 {
        return Err(GroupError::ZeroOrder);
    }
    let order = 2 * n;
    // (s^a r^k)(s^b r^m) = s^(a+b) r^((-1)^b k + m)
    let mul = |x: usize, y: usize| {
        let (a, k) = (x / n, x % n);
        let (b, m) = (y / n, y % n);
        let k = if b == 1 { (n - k) % n } else { k };
        ((a + b) % 2) * n + (k + m) % n
    };
    let mul_table = (0..order * order)
        .map(|idx| mul(idx / order, idx % order))
        .collect();
    FiniteGroup::from_table(format!("d{n}"), order, mul_table)
}

impl FromStr for FiniteGroup {
    type Err = GroupError;

    /// Parses `z<n>` or `d<n>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let unknown = || GroupError::UnknownName(s.to_string());
        let (kind, digits) = lower.split_at(lower.len().min(1));
        let n: usize = digits.parse().map_err(|_| unknown())?;
        match kind {
            "z" => make_cyclic(n),
            "d" => make_dihedral(n),
            _ => Err(unknown()),
        }
    }
}

impl FiniteGroup {
    /// Wraps a multiplication table after checking the group axioms.
    pub fn from_table(
        name: impl Into<String>,
        order: usize,
        mul_table: Vec<usize>,
    ) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::ZeroOrder);
        }
        if mul_table.len() != order * order {
            return Err(GroupError::Axiom(format!(
                "table has {} entries, expected {}",
                mul_table.len(),
                order * order
            )));
        }
        if let Some(&bad) = mul_table.iter().find(|&&x| x >= order) {
            return Err(GroupError::Axiom(format!(
                "table entry {bad} is not an element"
            )));
        }
        let identity = (0..order)
            .find(|&e| {
                (0..order).all(|a| mul_table[e * order + a] == a && mul_table[a * order + e] == a)
            })
            .ok_or_else(|| GroupError::Axiom("no identity element".into()))?;
        let mut inv_table = Vec::with_capacity(order);
        for a in 0..order {
            let inv = (0..order)
                .find(|&b| {
                    mul_table[a * order + b] == identity && mul_table[b * order + a] == identity
                })
                .ok_or_else(|| GroupError::Axiom(format!("element {a} has no inverse")))?;
            inv_table.push(inv);
        }
        let group = Self {
            name: name.into(),
            order,
            mul_table,
            inv_table,
            identity,
        };
        group.check_associative()?;
        Ok(group)
    }

    fn check_associative(&self) -> Result<(), GroupError> {
        let n = self.order;
        for a in 0..n {
            for b in 0..n {
                let ab = self.mul_table[a * n + b];
                for c in 0..n {
                    let bc = self.mul_table[b * n + c];
                    if self.mul_table[ab * n + c] != self.mul_table[a * n + bc] {
                        return Err(GroupError::Axiom(format!("({a}{b}){c} != {a}({b}{c})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(self.identity)
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order).map(GroupElement)
    }

    pub fn element(&self, index: usize) -> Result<GroupElement, GroupError> {
        if index < self.order {
            Ok(GroupElement(index))
        } else {
            Err(GroupError::InvalidElement {
                index,
                order: self.order,
            })
        }
    }

    #[inline]
    pub fn mul(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        GroupElement(self.mul_table[a.0 * self.order + b.0])
    }

    #[inline]
    pub fn inv(&self, a: GroupElement) -> GroupElement {
        GroupElement(self.inv_table[a.0])
    }

    pub fn pow(&self, g: GroupElement, k: usize) -> GroupElement {
        (0..k).fold(self.identity(), |acc, _| self.mul(acc, g))
    }

    /// Smallest `k ≥ 1` with `g^k = e`.
    pub fn element_order(&self, g: GroupElement) -> usize {
        let mut acc = g;
        let mut k = 1;
        while acc != self.identity() {
            acc = self.mul(acc, g);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Conjugacy classes, each sorted, in order of their smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<GroupElement>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for a in self.elements() {
            if seen[a.0] {
                continue;
            }
            let mut class: Vec<GroupElement> = self
                .elements()
                .map(|g| self.mul(self.mul(g, a), self.inv(g)))
                .collect();
            class.sort();
            class.dedup();
            for c in &class {
                seen[c.0] = true;
            }
            classes.push(class);
        }
        classes
    }

    /// Order of the subgroup generated by `gens`.
    pub fn generated_subgroup_order(&self, gens: &[GroupElement]) -> usize {
        let mut seen = vec![false; self.order];
        let mut queue = VecDeque::from([self.identity()]);
        seen[self.identity] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y.0] {
                    seen[y.0] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count
    }

    /// Uniform (Haar) draw.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        GroupElement(rng.random_range(0..self.order))
    }
}

/// Samples group elements as products of randomly chosen generators.
///
/// Each letter of the word is drawn uniformly from `generators` (repeats
/// allowed), so the output approaches the uniform distribution as the word
/// grows.
#[derive(Debug, Clone)]
pub struct WordSampler {
    generators: Vec<GroupElement>,
    word_length: usize,
}

impl WordSampler {
    pub fn new(
        group: &FiniteGroup,
        generators: Vec<GroupElement>,
        word_length: usize,
    ) -> Result<Self, GroupError> {
        if generators.is_empty() {
            return Err(GroupError::NoGenerators);
        }
        for g in &generators {
            group.element(g.0)?;
        }
        let generated = group.generated_subgroup_order(&generators);
        if generated != group.order() {
            return Err(GroupError::NotGenerating {
                generated,
                order: group.order(),
            });
        }
        Ok(Self {
            generators,
            word_length,
        })
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn word_length(&self) -> usize {
        self.word_length
    }

    pub fn sample<R: Rng + ?Sized>(&self, group: &FiniteGroup, rng: &mut R) -> GroupElement {
        (0..self.word_length).fold(group.identity(), |acc, _| {
            let g = self.generators[rng.random_range(0..self.generators.len())];
            group.mul(acc, g)
        })
    }

    /// Exact output distribution of [`WordSampler::sample`], indexed by element.
    pub fn distribution(&self, group: &FiniteGroup) -> Vec<f64> {
        let n = group.order();
        let step = 1.0 / self.generators.len() as f64;
        let mut dist = vec![0.0; n];
        dist[group.identity().0] = 1.0;
        for _ in 0..self.word_length {
            let mut next = vec![0.0; n];
            for (a, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for &g in &self.generators {
                    next[group.mul(GroupElement(a), g).0] += p * step;
                }
            }
            dist = next;
        }
        dist
    }
}

/// Total-variation distance `½ Σ |p_i − 1/n|` to the uniform distribution.
pub fn tv_distance_to_uniform(dist: &[f64]) -> f64 {
    let u = 1.0 / dist.len() as f64;
    0.5 * dist.iter().map(|p| (p - u).abs()).sum::<f64>()
}
