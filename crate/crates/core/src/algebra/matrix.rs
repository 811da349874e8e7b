use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::Quaternion;
use crate::{Error, Result};

/// Entry type of a Hermitian matrix: reals, complex numbers or quaternions.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Number of real components per entry (1, 2 or 4).
    const COMPONENTS: usize;
    /// Side of the complex block replacing one entry (1, or 2 for quaternions).
    const EMBED: usize;

    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn is_finite(self) -> bool;
    /// Builds an entry from its real components (missing ones are zero).
    fn from_components(c: &[f64]) -> Self;
    /// Complex block `[[a+bi, c+di], [-c+di, a-bi]]` (1x1 for commutative fields).
    fn embed_block(self) -> [[Complex64; 2]; 2];
}

impl Scalar for f64 {
    const COMPONENTS: usize = 1;
    const EMBED: usize = 1;
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn from_components(c: &[f64]) -> Self {
        c.first().copied().unwrap_or(0.0)
    }
    fn embed_block(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        [[Complex64::new(self, 0.0), z], [z, z]]
    }
}

impl Scalar for Complex64 {
    const COMPONENTS: usize = 2;
    const EMBED: usize = 1;
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
    fn from_components(c: &[f64]) -> Self {
        let g = |i: usize| c.get(i).copied().unwrap_or(0.0);
        Complex64::new(g(0), g(1))
    }
    fn embed_block(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        [[self, z], [z, z]]
    }
}

impl Scalar for Quaternion {
    const COMPONENTS: usize = 4;
    const EMBED: usize = 2;
    fn zero() -> Self {
        Quaternion::ZERO
    }
    fn from_real(x: f64) -> Self {
        Quaternion::real(x)
    }
    fn conj(self) -> Self {
        Quaternion::conj(self)
    }
    fn re(self) -> f64 {
        self.a
    }
    fn norm_sqr(self) -> f64 {
        Quaternion::norm_sqr(self)
    }
    fn scale(self, s: f64) -> Self {
        Quaternion::scale(self, s)
    }
    fn is_finite(self) -> bool {
        Quaternion::is_finite(self)
    }
    fn from_components(c: &[f64]) -> Self {
        Quaternion::from_slice(c)
    }
    fn embed_block(self) -> [[Complex64; 2]; 2] {
        let Quaternion { a, b, c, d } = self;
        [
            [Complex64::new(a, b), Complex64::new(c, d)],
            [Complex64::new(-c, d), Complex64::new(a, -b)],
        ]
    }
}

/// Dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::from_real(1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Structural(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    /// Real diagonal matrix.
    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = T::from_real(x);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    /// Sets entry (i,j) and its mirror (j,i) to the conjugate.
    pub fn set_hermitian(&mut self, i: usize, j: usize, v: T) {
        self.set(i, j, v);
        self.set(j, i, v.conj());
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn conj_transpose(&self) -> Self {
        Matrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    /// Largest deviation from Hermiticity, max |m_ij - conj(m_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm_sqr().sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Structural("matrix product dimension mismatch".into()));
        }
        let n = self.n;
        Ok(Matrix::from_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j))
        }))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Positional partial transpose: every `block_dim x block_dim` block is
/// transposed in place, without conjugation.
///
/// For a bipartite index (i, j) with j the fast index this is
/// rho^{T_B}_{(i,j),(k,l)} = rho_{(i,l),(k,j)}.
pub fn partial_transpose<T: Scalar>(m: &Matrix<T>, block_dim: usize) -> Result<Matrix<T>> {
    let d = m.dim();
    if block_dim == 0 || !d.is_multiple_of(block_dim) {
        return Err(Error::Structural(format!(
            "dimension {d} is not divisible by block size {block_dim}"
        )));
    }
    Ok(Matrix::from_fn(d, |r, c| {
        let (bi, a) = (r / block_dim, r % block_dim);
        let (bk, b) = (c / block_dim, c % block_dim);
        m.get(bi * block_dim + b, bk * block_dim + a)
    }))
}

/// Index map of the positional partial transpose: entry (r, c) of the
/// result is entry `pt_source(r, c)` of the input.
pub fn pt_source(r: usize, c: usize, block_dim: usize) -> (usize, usize) {
    let (bi, a) = (r / block_dim, r % block_dim);
    let (bk, b) = (c / block_dim, c % block_dim);
    (bi * block_dim + b, bk * block_dim + a)
}

/// LDL* test of `M + shift I > 0` on a row-major Hermitian buffer, which is
/// overwritten. Only the lower triangle is read.
///
/// Returns true iff every pivot is positive, i.e. the smallest eigenvalue
/// of M exceeds `-shift`. Stops at the first non-positive pivot.
pub fn ldl_positive<T: Scalar>(a: &mut [T], n: usize, shift: f64) -> bool {
    debug_assert_eq!(a.len(), n * n);
    let mut d = [0.0f64; 16];
    debug_assert!(n <= 16);
    for j in 0..n {
        let mut dj = a[j * n + j].re() + shift;
        for k in 0..j {
            dj -= d[k] * a[j * n + k].norm_sqr();
        }
        if !(dj > 0.0) {
            return false;
        }
        d[j] = dj;
        let inv = 1.0 / dj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - (a[i * n + k] * a[j * n + k].conj()).scale(d[k]);
            }
            a[i * n + j] = s.scale(inv);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_transpose_swaps_14_and_23() {
        let z = Complex64::new(0.3, -0.2);
        let mut m = Matrix::<Complex64>::identity(4);
        m.set_hermitian(0, 3, z);
        let pt = partial_transpose(&m, 2).unwrap();
        assert_eq!(pt.get(1, 2), z);
        assert_eq!(pt.get(2, 1), z.conj());
        assert_eq!(pt.get(0, 3), Complex64::new(0.0, 0.0));
        assert_eq!(partial_transpose(&pt, 2).unwrap(), m);
    }

    #[test]
    fn partial_transpose_rejects_bad_blocks() {
        let m = Matrix::<f64>::identity(6);
        assert!(partial_transpose(&m, 4).is_err());
        assert!(partial_transpose(&m, 0).is_err());
    }

    #[test]
    fn ldl_matches_closed_form_for_equicorrelation() {
        // eigenvalues 1-w (x3) and 1+3w: PSD iff w in [-1/3, 1]
        for &(w, ok) in &[(-0.34, false), (-0.32, true), (0.5, true), (0.99, true), (1.01, false)] {
            let m = Matrix::<f64>::from_fn(4, |i, j| if i == j { 1.0 } else { w });
            let mut buf = m.as_slice().to_vec();
            assert_eq!(ldl_positive(&mut buf, 4, 1e-12), ok, "w = {w}");
        }
    }
}
