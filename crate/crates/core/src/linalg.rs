//! Dense complex linear algebra for the small (n <= 8) operators used
//! throughout the crate.
//!
//! Matrices are stored row-major. Everything here is pure; values can be
//! shared freely between threads.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Eigenvalues of `I - M^dagger M` a few ulp below zero are clamped at this
/// tolerance before taking square roots.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixLiteral", into = "MatrixLiteral")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// JSON form of a matrix: `{"rows": r, "cols": c, "re": [...], "im": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TryFrom<MatrixLiteral> for ComplexMatrix {
    type Error = Error;

    fn try_from(lit: MatrixLiteral) -> Result<Self> {
        if lit.re.len() != lit.im.len() {
            return Err(Error::InvalidMatrix(format!(
                "re has {} entries but im has {}",
                lit.re.len(),
                lit.im.len()
            )));
        }
        let data = lit
            .re
            .iter()
            .zip(&lit.im)
            .map(|(&r, &i)| c64(r, i))
            .collect();
        ComplexMatrix::new(lit.rows, lit.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixLiteral {
    fn from(m: ComplexMatrix) -> Self {
        MatrixLiteral {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix("dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries. Panics on a size mismatch;
    /// meant for literals.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "literal size mismatch");
        Self {
            rows,
            cols,
            data: entries.iter().map(|&x| c64(x, 0.0)).collect(),
        }
    }

    /// Builds a matrix from complex row-major entries. Panics on a size mismatch.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "literal size mismatch");
        Self {
            rows,
            cols,
            data: entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c64(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        let data = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect();
        ComplexVector { data }
    }

    /// Kronecker product `self ⊗ rhs`; `self` indexes the high-order digit.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Copies the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    /// Assembles `[[a, b], [c, d]]` from four equally sized square blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let n = a.rows;
        for m in [a, b, c, d] {
            assert!(m.rows == n && m.cols == n, "block shape mismatch");
        }
        let mut out = Self::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a[(i, j)];
                out[(i, n + j)] = b[(i, j)];
                out[(n + i, j)] = c[(i, j)];
                out[(n + i, n + j)] = d[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A^dagger|`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        (self + &adj).scale(c64(0.5, 0.0))
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector {
            data: (0..self.rows).map(|i| self[(i, j)]).collect(),
        }
    }

    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        let cols = columns.len();
        let rows = columns[0].dim();
        let mut out = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.dim(), rows);
            for i in 0..rows {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Largest absolute entrywise difference between two equally shaped matrices.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        (self - other).max_abs()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
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
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Dense complex vector of amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorLiteral", into = "VectorLiteral")]
pub struct ComplexVector {
    data: Vec<C64>,
}

/// JSON form of a vector: `{"dim": d, "re": [...], "im": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorLiteral {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TryFrom<VectorLiteral> for ComplexVector {
    type Error = Error;

    fn try_from(lit: VectorLiteral) -> Result<Self> {
        if lit.re.len() != lit.dim || lit.im.len() != lit.dim {
            return Err(Error::InvalidMatrix(format!(
                "vector literal of dim {} has {} re / {} im entries",
                lit.dim,
                lit.re.len(),
                lit.im.len()
            )));
        }
        ComplexVector::new(
            lit.re
                .iter()
                .zip(&lit.im)
                .map(|(&r, &i)| c64(r, i))
                .collect(),
        )
    }
}

impl From<ComplexVector> for VectorLiteral {
    fn from(v: ComplexVector) -> Self {
        VectorLiteral {
            dim: v.dim(),
            re: v.data.iter().map(|z| z.re).collect(),
            im: v.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidMatrix(
                "vector dimension must be positive".into(),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite vector entry".into()));
        }
        Ok(Self { data })
    }

    pub fn from_real(entries: &[f64]) -> Self {
        assert!(!entries.is_empty());
        Self {
            data: entries.iter().map(|&x| c64(x, 0.0)).collect(),
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![c64(0.0, 0.0); dim];
        data[index] = c64(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    /// `|v><v|`.
    pub fn outer(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[i] * self[j].conj();
            }
        }
        out
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<ComplexVector>,
}

impl HermitianEigen {
    /// `sum_k f(lambda_k) u_k u_k^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors[0].dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (&lambda, u) in self.values.iter().zip(&self.vectors) {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += u[i] * u[j].conj() * w;
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    let asymmetry = a.hermitian_defect();
    if asymmetry > tol {
        return Err(Error::NotHermitian { asymmetry, tol });
    }
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)] = c64(m[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-300 || off <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(f64, ComplexVector)> =
        (0..n).map(|k| (m[(k, k)].re, v.column(k))).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(HermitianEigen { values, vectors })
}

fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = m.rows();
    let beta = m[(p, q)];
    let mag = beta.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Skip rotations that cannot change the diagonal in floating point.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = C64::new(0.0, 0.0);
        m[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    // Phase that makes the (p, q) entry real, followed by a real rotation.
    let phase = beta.conj() / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let vpp = c64(c, 0.0);
    let vpq = c64(s, 0.0);
    let vqp = phase * -s;
    let vqq = phase * c;

    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * vpp + mkq * vqp;
        m[(k, q)] = mkp * vpq + mkq * vqq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * mpk + vqp.conj() * mqk;
        m[(q, k)] = vpq.conj() * mpk + vqq.conj() * mqk;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)] = c64(m[(p, p)].re, 0.0);
    m[(q, q)] = c64(m[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero; anything more negative is
/// rejected as `NotPsd`.
pub fn psd_sqrt(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, tol)?;
    if let Some(&worst) = eig.values.last() {
        if worst < -tol {
            return Err(Error::NotPsd {
                eigenvalue: worst,
                tol,
            });
        }
    }
    let root = eig.reconstruct_with(|lambda| lambda.max(0.0).sqrt());
    Ok(root.hermitian_part())
}

/// `||U^dagger U - I||_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> Result<f64> {
    let n = u.require_square()?;
    let gram = u.adjoint().matmul(u);
    Ok((&gram - &ComplexMatrix::identity(n)).frobenius_norm())
}

/// Largest singular value, via the top eigenvalue of `M^dagger M`.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    let gram = m.adjoint().matmul(m);
    let eig = hermitian_eig(&gram, f64::INFINITY).expect("Gram matrix is square");
    eig.values[0].max(0.0).sqrt()
}

/// Determinant by LU decomposition with partial pivoting.
pub fn determinant(a: &ComplexMatrix) -> Result<C64> {
    let n = a.require_square()?;
    let mut m = a.clone();
    let mut det = c64(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .expect("non-empty range");
        if m[(pivot, col)].norm() == 0.0 {
            return Ok(c64(0.0, 0.0));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        let p = m[(col, col)];
        det *= p;
        for i in (col + 1)..n {
            let factor = m[(i, col)] / p;
            for j in col..n {
                let sub = factor * m[(col, j)];
                m[(i, j)] -= sub;
            }
        }
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(n: usize, entries: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let re = entries[k % entries.len()];
                let im = if i == j {
                    0.0
                } else {
                    entries[(k + 7) % entries.len()]
                };
                k += 1;
                m[(i, j)] = c64(re, im);
                m[(j, i)] = c64(re, -im);
            }
        }
        m
    }

    #[test]
    fn sqrt_of_identity_and_zero() {
        let id = ComplexMatrix::identity(2);
        assert!(psd_sqrt(&id, 1e-12).unwrap().max_diff(&id) < 1e-15);
        let zero = ComplexMatrix::zeros(2, 2);
        assert!(psd_sqrt(&zero, 1e-12).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn sqrt_of_half_identity() {
        let a = ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let s = psd_sqrt(&a, 1e-12).unwrap();
        let expected = ComplexMatrix::from_real(
            2,
            2,
            &[
                std::f64::consts::FRAC_1_SQRT_2,
                0.0,
                0.0,
                std::f64::consts::FRAC_1_SQRT_2,
            ],
        );
        assert!(s.max_diff(&expected) < 1e-15);
        assert!(s.matmul(&s).max_diff(&a) < 1e-15);
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let skew = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            psd_sqrt(&skew, 1e-12),
            Err(Error::NotHermitian { .. })
        ));
        let neg = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(psd_sqrt(&neg, 1e-12), Err(Error::NotPsd { .. })));
        // Slightly negative eigenvalues inside the tolerance are clamped.
        let tiny = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1e-13]);
        let s = psd_sqrt(&tiny, 1e-12).unwrap();
        assert_eq!(s[(1, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn unitarity_defect_examples() {
        assert_eq!(unitarity_defect(&ComplexMatrix::identity(4)).unwrap(), 0.0);
        let d = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!((unitarity_defect(&d).unwrap() - 3.0).abs() < 1e-15);
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            unitarity_defect(&rect),
            Err(Error::NonSquare { .. })
        ));
    }

    #[test]
    fn eig_examples() {
        let d = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let eig = hermitian_eig(&d, 1e-12).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert!((eig.vectors[0][1].norm() - 1.0).abs() < 1e-15);

        // Characteristic polynomial x^2 - x + 1/8 = 0.
        let a = ComplexMatrix::from_real(2, 2, &[0.25, 0.25, 0.25, 0.75]);
        let eig = hermitian_eig(&a, 1e-12).unwrap();
        let root = 0.5f64.sqrt();
        assert!((eig.values[0] - (1.0 + root) / 2.0).abs() < 1e-15);
        assert!((eig.values[1] - (1.0 - root) / 2.0).abs() < 1e-15);
        for (lambda, u) in eig.values.iter().zip(&eig.vectors) {
            let au = a.apply(u);
            for i in 0..2 {
                assert!((au[i] - u[i] * *lambda).norm() < 1e-14);
            }
        }

        let eig = hermitian_eig(&ComplexMatrix::identity(2), 1e-12).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0]);
        assert!(eig.vectors[0].dot(&eig.vectors[1]).norm() < 1e-15);
    }

    #[test]
    fn eig_handles_complex_entries() {
        // Pauli Y has eigenvalues +1 and -1.
        let y = ComplexMatrix::from_rows(
            2,
            2,
            vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)],
        );
        let eig = hermitian_eig(&y, 1e-12).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!((eig.values[1] + 1.0).abs() < 1e-15);
        assert!(eig.reconstruct_with(|x| x).max_diff(&y) < 1e-15);
    }

    #[test]
    fn determinant_of_known_matrices() {
        let a = ComplexMatrix::from_real(3, 3, &[2.0, 0.0, 1.0, 1.0, 3.0, 2.0, 1.0, 1.0, 1.0]);
        // 2(3 - 2) - 0 + 1(1 - 3) = 0
        assert!(determinant(&a).unwrap().norm() < 1e-15);
        let b = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((determinant(&b).unwrap() + 1.0).norm() < 1e-15);
    }

    #[test]
    fn json_literal_round_trip() {
        let m = ComplexMatrix::from_rows(1, 2, vec![c64(1.0, 2.0), c64(-0.5, 0.0)]);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"rows":1,"cols":2,"re":[1.0,-0.5],"im":[2.0,0.0]}"#
        );
        let back: ComplexMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"rows":2,"cols":2,"re":[1.0],"im":[0.0]}"#;
        assert!(serde_json::from_str::<ComplexMatrix>(bad).is_err());
    }

    proptest! {
        #[test]
        fn eig_reconstructs_and_is_orthonormal(
            n in 1usize..=8,
            entries in proptest::collection::vec(-1.0f64..1.0, 40),
        ) {
            let a = random_hermitian(n, &entries);
            let eig = hermitian_eig(&a, 1e-12).unwrap();
            prop_assert!((&eig.reconstruct_with(|x| x) - &a).frobenius_norm() < 1e-10);
            for i in 0..n {
                for j in 0..n {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((eig.vectors[i].dot(&eig.vectors[j]) - expected).norm() < 1e-12);
                }
            }
            for w in eig.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn sqrt_squares_back(
            n in 1usize..=8,
            entries in proptest::collection::vec(-1.0f64..1.0, 40),
        ) {
            let g = random_hermitian(n, &entries);
            let a = g.matmul(&g); // PSD
            let s = psd_sqrt(&a, DEFAULT_CLAMP_TOL).unwrap();
            prop_assert!(s.hermitian_defect() < 1e-12);
            prop_assert!((&s.matmul(&s) - &a).frobenius_norm() < 1e-10);
        }
    }
}
