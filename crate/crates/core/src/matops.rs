//! Dense real linear algebra for covariance work.
//!
//! Every matrix function (square root, logarithm, inverse powers, cone
//! projection) is evaluated through a single cyclic-Jacobi eigendecomposition,
//! so results of different operations on the same input are mutually
//! consistent.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{CovError, Result};

/// Relative off-diagonal mass at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Eigenvalues above `-NEG_TOL * ||A||_F` are treated as roundoff.
pub const NEG_TOL: f64 = 1e-10;
/// Eigenvalues must exceed `PD_TOL * ||A||_F` for a matrix to count as positive definite.
pub const PD_TOL: f64 = 1e-12;

/// General dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(CovError::Empty);
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(CovError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Trace inner product `trace(A' B)`.
    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copies the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Dense real symmetric matrix. Symmetry is exact: construction averages
/// `A` with its transpose.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    m: Matrix,
}

impl SymMatrix {
    /// Symmetrizes a square matrix as `(A + A') / 2`.
    pub fn from_matrix(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(CovError::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        if a.rows() == 0 {
            return Err(CovError::Empty);
        }
        let n = a.rows();
        let m = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                a[(i, i)]
            } else {
                0.5 * (a[(i, j)] + a[(j, i)])
            }
        });
        Ok(SymMatrix { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(&Matrix::from_rows(rows)?)
    }

    /// Builds from the upper triangle produced by `f(i, j)` with `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "SymMatrix requires n >= 1");
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Outer product `x x'`.
    pub fn outer(x: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| x[i] * x[j])
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.frobenius_norm()
    }

    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: self.m.add(&other.m),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: self.m.sub(&other.m),
        }
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { m: self.m.scale(s) }
    }

    /// `self + s * I`.
    pub fn shift(&self, s: f64) -> SymMatrix {
        let mut m = self.m.clone();
        for i in 0..self.n() {
            m[(i, i)] += s;
        }
        SymMatrix { m }
    }

    /// Congruence `B A B'`, symmetrized.
    pub fn congruence(&self, b: &Matrix) -> SymMatrix {
        let prod = b.matmul(&self.m).matmul(&b.transpose());
        SymMatrix::from_matrix(&prod).expect("congruence of square matrices is square")
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        self.m.matmul(other)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.m[(i, i)]).collect()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.m)
    }
}

/// Eigendecomposition `A = V diag(values) V'` with eigenvalues sorted
/// descending and eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigDecomp {
    /// Rebuilds `V diag(f(λ)) V'`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.compose(&mapped)
    }

    /// `V diag(d) V'` for caller-supplied diagonal values.
    pub fn compose(&self, d: &[f64]) -> SymMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * d[k] * v[(j, k)]).sum())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.compose(&self.values)
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps run in fixed row-major pair order until the off-diagonal Frobenius
/// mass drops below `1e-12 * ||A||_F`.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.n();
    let mut w = a.as_matrix().as_slice().to_vec();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm();
    let target = JACOBI_TOL * norm;

    let off = |w: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += w[i * n + j] * w[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let residual = off(&w);
        if residual <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(CovError::EigNoConvergence { sweeps, residual });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    w[k * n + p] = c * akp - s * akq;
                    w[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[p * n + k];
                    let aqk = w[q * n + k];
                    w[p * n + k] = c * apk - s * aqk;
                    w[q * n + k] = s * apk + c * aqk;
                }
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j * n + j].total_cmp(&w[i * n + i]));
    let values = order.iter().map(|&i| w[i * n + i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomp { values, vectors })
}

/// Smallest eigenvalue.
pub fn min_eig(a: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(a)?.min())
}

fn check_negative(eig: &EigDecomp, norm: f64) -> Result<()> {
    let tol = NEG_TOL * norm;
    let lo = eig.min();
    if lo < -tol {
        return Err(CovError::NegativeEigenvalue { value: lo, tol });
    }
    Ok(())
}

fn check_pd(eig: &EigDecomp, norm: f64) -> Result<()> {
    let lo = eig.min();
    if lo <= PD_TOL * norm {
        return Err(CovError::NotPositiveDefinite { min_eig: lo });
    }
    Ok(())
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `(-1e-10 ||A||_F, 0)` are roundoff and are raised to
/// `clip_floor`; anything more negative is rejected.
pub fn sqrtm_psd(a: &SymMatrix, clip_floor: f64) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    check_negative(&eig, a.frobenius_norm())?;
    Ok(eig.map(|l| l.max(clip_floor).sqrt()))
}

/// Matrix logarithm of a symmetric positive definite matrix.
pub fn logm_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    check_pd(&eig, a.frobenius_norm())?;
    Ok(eig.map(f64::ln))
}

/// `A^p` for symmetric positive definite `A` (any real `p`).
pub fn powm_spd(a: &SymMatrix, p: f64) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    check_pd(&eig, a.frobenius_norm())?;
    Ok(eig.map(|l| l.powf(p)))
}

pub fn inv_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    check_pd(&eig, a.frobenius_norm())?;
    Ok(eig.map(|l| 1.0 / l))
}

/// `log det A` for symmetric positive definite `A`.
pub fn logdet_spd(a: &SymMatrix) -> Result<f64> {
    let eig = sym_eig(a)?;
    check_pd(&eig, a.frobenius_norm())?;
    Ok(eig.values.iter().map(|l| l.ln()).sum())
}

/// Frobenius-nearest positive semidefinite matrix.
pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(sym_eig(a)?.map(|l| l.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub trace: f64,
    pub nuclear: f64,
}

pub fn norms(a: &SymMatrix) -> Result<Norms> {
    let eig = sym_eig(a)?;
    Ok(Norms {
        frobenius: a.frobenius_norm(),
        trace: a.trace(),
        nuclear: eig.values.iter().map(|l| l.abs()).sum(),
    })
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(CovError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(CovError::NotPositiveDefinite { min_eig: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    Ok(x)
}
