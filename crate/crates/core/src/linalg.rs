//! Dense complex vectors and matrices.
//!
//! Dimensions in this crate stay below a few thousand, so everything is
//! stored densely in row-major order. The only decomposition needed is the
//! Hermitian eigendecomposition, which also backs the matrix exponential of
//! `±i·H` for Hermitian `H`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub use num_complex::Complex64 as C64;

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Operator-level comparisons (unitarity, reconstruction).
    pub const OPERATOR: f64 = 1e-10;
    /// Vector-level comparisons and exact-algebra checks.
    pub const VECTOR: f64 = 1e-12;
    /// Maximum `‖M − M†‖_max` (relative to `max(1, ‖M‖_max)`) accepted as Hermitian.
    pub const HERMITIAN: f64 = 1e-12;
    /// Norm deviation accepted for a state labelled normalized.
    pub const NORMALIZED: f64 = 1e-9;
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting NaN/Inf entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LinalgError::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `Σ_k |a_k⟩⟨b_k|` style outer product `u v†`.
    pub fn outer(u: &StateVector, v: &StateVector) -> Self {
        Self::from_fn(u.dim(), v.dim(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[StateVector]) -> Self {
        let rows = columns.first().map_or(0, |c| c.dim());
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector::from_vec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus, `‖M‖_max`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖_max`. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖M − M†‖_max`.
    pub fn hermitian_deviation(&self) -> Result<f64> {
        self.require_square()?;
        let n = self.rows;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Ok(dev)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation().is_ok_and(|d| d <= tol)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = &self.adjoint() * self;
        gram.max_abs_diff(&Self::identity(self.cols))
    }

    /// Checked matrix product.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `M·v`.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.dim(),
            });
        }
        Ok(StateVector::from_vec(
            (0..self.rows)
                .map(|i| dot_unconj(self.row(i), v.as_slice()))
                .collect(),
        ))
    }

    /// `M^n` by repeated squaring; `M^0 = I`.
    pub fn pow(&self, n: usize) -> Result<Self> {
        self.require_square()?;
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Largest singular value, from the top eigenvalue of `M†M`.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0.0);
        }
        let gram = &self.adjoint() * self;
        let eig = hermitian_eig(&gram)?;
        let top = eig.values.last().copied().unwrap_or(0.0);
        Ok(top.max(0.0).sqrt())
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for z in self.row(i) {
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Complex amplitudes over a computational basis.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_vec(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::from_vec(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_vec(vec![ZERO; dim])
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amplitudes[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the normalized vector, or `None` for a zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= tol::NORMALIZED
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_vec(self.amplitudes.iter().map(|&z| z * s).collect())
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: Complex64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::from_vec(
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        )
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.amplitudes.iter().map(|z| (z.re, z.im)))
            .finish()
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.amplitudes[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.amplitudes[i]
    }
}

/// `⟨u|v⟩`, conjugate-linear in `u`.
pub fn overlap(u: &StateVector, v: &StateVector) -> Result<Complex64> {
    if u.dim() != v.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(u.as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

#[inline]
fn dot_unconj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}

/// Eigendecomposition `M = Q·diag(values)·Q†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `Q·diag(f(λ))·Q†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let fvals: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += q[(i, k)] * fvals[k] * q[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `exp(sign·i·M)`.
    pub fn exp_i(&self, sign: f64) -> ComplexMatrix {
        self.map_spectrum(|l| Complex64::from_polar(1.0, sign * l))
    }

    /// `exp(sign·i·M)·v` without forming the matrix.
    pub fn exp_i_apply(&self, sign: f64, v: &StateVector) -> StateVector {
        let n = self.values.len();
        assert_eq!(v.dim(), n);
        let q = &self.vectors;
        // c = diag(e^{±iλ}) Q† v
        let mut coeffs = vec![ZERO; n];
        for i in 0..n {
            let vi = v[i];
            if vi == ZERO {
                continue;
            }
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c += q[(i, k)].conj() * vi;
            }
        }
        for (c, &l) in coeffs.iter_mut().zip(&self.values) {
            *c *= Complex64::from_polar(1.0, sign * l);
        }
        StateVector::from_vec((0..n).map(|i| dot_unconj(q.row(i), &coeffs)).collect())
    }

    /// `‖M·Q − Q·diag(λ)‖_max`.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let mq = m * &self.vectors;
        let n = self.values.len();
        let mut dev = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                dev = dev.max((mq[(i, k)] - self.vectors[(i, k)] * self.values[k]).norm());
            }
        }
        dev
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Householder reduction to complex tridiagonal form, a diagonal phase
/// change to a real symmetric tridiagonal, then implicit QL with Wilkinson
/// shifts.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = m.rows();
    let dev = m.hermitian_deviation()?;
    if dev > tol::HERMITIAN * m.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { deviation: dev });
    }
    if let Some(pos) = m
        .as_slice()
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(LinalgError::NonFinite(pos));
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }

    // Work on an exactly Hermitian copy built from the lower triangle.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => m[(i, j)],
        std::cmp::Ordering::Less => m[(j, i)].conj(),
        std::cmp::Ordering::Equal => Complex64::new(m[(i, i)].re, 0.0),
    });
    let mut q = ComplexMatrix::identity(n);
    let negligible = f64::EPSILON * f64::EPSILON * a.max_abs();

    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let sigma = (lo..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[(lo, k)];
        if sigma <= negligible || (lo + 1..n).all(|i| a[(i, k)] == ZERO) {
            // Nothing (or only roundoff dust) below the subdiagonal.
            for i in lo + 1..n {
                a[(i, k)] = ZERO;
                a[(k, i)] = ZERO;
            }
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        for i in lo..n {
            v[i] = a[(i, k)];
        }
        v[lo] += phase * sigma;
        let vnorm2: f64 = (lo..n).map(|i| v[i].norm_sqr()).sum();
        let beta = 2.0 / vnorm2;

        // p = beta * A_sub v, restricted to the trailing block.
        for i in lo..n {
            let mut acc = ZERO;
            for j in lo..n {
                acc += a[(i, j)] * v[j];
            }
            p[i] = acc * beta;
        }
        let vp: Complex64 = (lo..n).map(|i| v[i].conj() * p[i]).sum();
        let kk = 0.5 * beta * vp.re;
        for i in lo..n {
            p[i] -= v[i] * kk;
        }
        // A <- A - v q^† - q v^† on the trailing block.
        for i in lo..n {
            for j in lo..n {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj();
                a[(i, j)] -= upd;
            }
        }
        // Column k below the subdiagonal is annihilated.
        let sub = -phase * sigma;
        a[(lo, k)] = sub;
        a[(k, lo)] = sub.conj();
        for i in lo + 1..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
        // Q <- Q H
        for r in 0..n {
            let mut acc = ZERO;
            for j in lo..n {
                acc += q[(r, j)] * v[j];
            }
            acc *= beta;
            for j in lo..n {
                let upd = acc * v[j].conj();
                q[(r, j)] -= upd;
            }
        }
    }

    // Phase change to a real tridiagonal.
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off = vec![0.0; n];
    let mut delta = vec![ONE; n];
    for k in 0..n - 1 {
        let c = a[(k + 1, k)];
        let r = c.norm();
        off[k + 1] = r;
        delta[k + 1] = if r > 0.0 {
            delta[k] * (c / r)
        } else {
            delta[k]
        };
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(n, &mut diag, &mut off, &mut z)?;

    // Eigenvectors: Q·D·Z.
    let mut vectors = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                let zk = z[k * n + c];
                if zk != 0.0 {
                    acc += q[(r, k)] * delta[k] * zk;
                }
            }
            vectors[(r, c)] = acc;
        }
    }
    Ok(HermitianEigen {
        values: diag,
        vectors,
    })
}

/// Symmetric tridiagonal QL with implicit shifts (EISPACK `tql2`).
///
/// `d` holds the diagonal, `e[1..n]` the subdiagonal; `z` (row-major,
/// `n×n`) accumulates the rotations. On return `d` is ascending and the
/// columns of `z` are the matching eigenvectors.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LinalgError::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort, ascending, carrying eigenvector columns along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for r in 0..n {
                z.swap(r * n + i, r * n + k);
            }
        }
    }
    Ok(())
}

/// `exp(sign·i·H)` for Hermitian `H`, via its eigendecomposition.
pub fn expm_i_hermitian(h: &ComplexMatrix, sign: f64) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.exp_i(sign))
}

/// `exp(sign·i·H)·v` by a truncated Taylor series on the vector.
///
/// Terms are summed until the next one drops below `1e-17·‖v‖`. Meant for
/// small-norm generators (`‖H‖ ≲ 1`) applied once, where a full
/// eigendecomposition would dominate the cost.
pub fn expm_i_apply_series(h: &ComplexMatrix, sign: f64, v: &StateVector) -> Result<StateVector> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let scale = Complex64::new(0.0, sign);
    let floor = 1e-17 * v.norm();
    let mut sum = v.clone();
    let mut term = v.clone();
    for k in 1..200 {
        term = h.apply(&term)?.scale(scale / k as f64);
        for (s, t) in sum.as_mut_slice().iter_mut().zip(term.as_slice()) {
            *s += t;
        }
        if term.norm() <= floor {
            return Ok(sum);
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Pauli matrices, for building small fixtures.
pub mod pauli {
    use super::{Complex64, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        let i = Complex64::new(0.0, 1.0);
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => Complex64::new(0.0, 0.0),
        })
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let (br, bc) = (b.rows(), b.cols());
        ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
            a[(i / br, j / bc)] * b[(i % br, j % bc)]
        })
    }
}
