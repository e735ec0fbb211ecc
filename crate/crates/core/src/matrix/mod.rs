//! Dense complex matrices and the small-dimension decompositions built on them.
//!
//! Everything here is sized for `N <= MAX_DIM`; no routine allocates more
//! than a few `N x N` work arrays.

mod eigen;
mod expm;
mod lu;
mod random;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use eigen::{match_spectra, schur_form, spectrum, Spectrum};
pub use expm::expm;
pub use lu::Lu;
pub use random::{complex_gaussian, derive_seed, random_unitary, rng_from_seed};
pub(crate) use random::ginibre;
pub use svd::{operator_norm, singular_data, singular_values, SingularData};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                k / cols,
                k % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix without validating finiteness. Dimensions must agree.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows of complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Builds a matrix from rows of real entries.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn require_square(&self, what: &str) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::InvalidInput(format!(
                "{what} requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    pub fn require_finite(&self) -> Result<()> {
        if let Some(k) = self.data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                k / self.cols,
                k % self.cols
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&z| z * s).collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    /// Copies rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Block-diagonal matrix `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (r, c) = (self.rows + other.rows, self.cols + other.cols);
        Self::from_fn(r, c, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else if i >= self.rows && j >= self.cols {
                other[(i - self.rows, j - self.cols)]
            } else {
                ZERO
            }
        })
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self + s * I`.
    pub fn add_scaled_identity(&self, s: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += s;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].norm() <= tol))
    }

    /// `||self^* self - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        (&g - &Self::identity(self.cols)).frobenius_norm()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix::from_raw(self.rows, self.cols, data)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix::from_raw(self.rows, self.cols, data)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Hermitian inner product `<x, y> = sum x_i conj(y_i)`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes `x` in place and returns its original norm.
pub(crate) fn normalize(x: &mut [C64]) -> f64 {
    let n = vec_norm(x);
    if n > 0.0 {
        for z in x.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// Removes from `x` its components along each of the orthonormal `basis`
/// vectors, twice, and returns the remaining norm.
pub(crate) fn orthogonalize(x: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = inner(x, q);
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= c * qi;
            }
        }
    }
    vec_norm(x)
}

/// Extends an orthonormal family to an orthonormal basis of `C^n` by
/// Gram-Schmidt on the standard basis vectors, largest residual first.
pub(crate) fn complete_basis(family: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = family.to_vec();
    while basis.len() < n {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for k in 0..n {
            let mut e = vec![ZERO; n];
            e[k] = ONE;
            let r = orthogonalize(&mut e, &basis);
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, e));
            }
        }
        let (_, mut v) = best.expect("n > 0");
        normalize(&mut v);
        basis.push(v);
    }
    basis
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryJson {
    Real(f64),
    Complex([f64; 2]),
}

/// Accepted input layouts: the canonical object form, or a list of rows whose
/// entries are reals or `[re, im]` pairs.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Object(MatrixJson),
    Rows(Vec<Vec<EntryJson>>),
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = match MatrixInput::deserialize(d)? {
            MatrixInput::Object(raw) => {
                let data = raw.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
                ComplexMatrix::new(raw.rows, raw.cols, data)
            }
            MatrixInput::Rows(rows) => {
                let rows: Vec<Vec<C64>> = rows
                    .into_iter()
                    .map(|r| {
                        r.into_iter()
                            .map(|e| match e {
                                EntryJson::Real(x) => C64::new(x, 0.0),
                                EntryJson::Complex([re, im]) => C64::new(re, im),
                            })
                            .collect()
                    })
                    .collect();
                ComplexMatrix::from_rows(&rows)
            }
        };
        m.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_bad_shapes_and_non_finite() {
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn json_layout() {
        let m = ComplexMatrix::new(1, 2, vec![c(1.0, -0.5), c(0.0, 2.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"entries":[[1.0,-0.5],[0.0,2.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_accepts_row_lists() {
        let m: ComplexMatrix = serde_json::from_str("[[0, 2], [0.3, 0]]").unwrap();
        assert_eq!(m, ComplexMatrix::from_real_rows(&[[0.0, 2.0], [0.3, 0.0]]).unwrap());
        let z: ComplexMatrix = serde_json::from_str("[[[1, -1], 2]]").unwrap();
        assert_eq!(z.entries(), &[c(1.0, -1.0), c(2.0, 0.0)]);
        assert!(serde_json::from_str::<ComplexMatrix>("[[1, 2], [3]]").is_err());
        assert!(serde_json::from_str::<ComplexMatrix>("[]").is_err());
    }

    #[test]
    fn json_rejects_wrong_entry_count() {
        let r: std::result::Result<ComplexMatrix, _> =
            serde_json::from_str(r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#);
        assert!(r.is_err());
    }

    #[test]
    fn direct_sum_blocks() {
        let a = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = ComplexMatrix::from_real_rows(&[[5.0]]).unwrap();
        let s = a.direct_sum(&b);
        assert_eq!(s.rows(), 3);
        assert_eq!(s[(2, 2)], c(5.0, 0.0));
        assert_eq!(s[(0, 2)], ZERO);
        assert_eq!(s[(1, 0)], c(3.0, 0.0));
    }

    #[test]
    fn completes_basis() {
        let mut v = vec![c(1.0, 1.0), c(0.0, 1.0), c(-1.0, 0.0)];
        normalize(&mut v);
        let b = complete_basis(&[v], 3);
        let u = ComplexMatrix::from_columns(&b);
        assert!(u.unitarity_defect() < 1e-14);
    }
}
