//! Small dense vectors and matrices with a Cholesky-based SPD solver.
//!
//! Everything here targets the tiny systems that show up in criterion-based
//! inference (d <= ~10), so the representation is a plain row-major `Vec<f64>`
//! and all algorithms are the textbook O(d^3) versions.

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Relative asymmetry beyond which a would-be symmetric matrix is rejected.
const SYM_TOL: f64 = 1e-8;

/// Relative pivot threshold for the positive-definiteness test.
pub const PD_PIVOT_RATIO: f64 = 1e-12;

/// A finite real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("empty vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEvaluation("vector entry".into()));
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    /// Panics on non-finite entries; use `Vector::new` for fallible construction.
    fn from(v: Vec<f64>) -> Self {
        Vector::new(v).expect("finite vector")
    }
}

/// A general rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nr = rows.len();
        if nr == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        let nc = rows[0].len();
        if rows.iter().any(|r| r.len() != nc) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEvaluation("matrix entry".into()));
        }
        Ok(Matrix { rows: nr, cols: nc, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.dim(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = (0..self.cols).map(|j| self[(i, j)] * v[j]).sum();
        }
        Vector(out)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| c * a).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Numerical row rank via Gaussian elimination with full pivoting.
    pub fn row_rank(&self, rel_tol: f64) -> usize {
        let mut a = self.clone();
        let scale = a.max_abs();
        if scale == 0.0 {
            return 0;
        }
        let tol = rel_tol * scale;
        let mut rank = 0;
        let mut used_rows = vec![false; a.rows];
        let mut used_cols = vec![false; a.cols];
        loop {
            // largest remaining entry is the pivot
            let mut best = (0usize, 0usize, 0.0f64);
            for i in 0..a.rows {
                if used_rows[i] {
                    continue;
                }
                for j in 0..a.cols {
                    if used_cols[j] {
                        continue;
                    }
                    if a[(i, j)].abs() > best.2 {
                        best = (i, j, a[(i, j)].abs());
                    }
                }
            }
            let (pi, pj, pval) = best;
            if pval <= tol {
                return rank;
            }
            rank += 1;
            used_rows[pi] = true;
            used_cols[pj] = true;
            let pivot = a[(pi, pj)];
            for i in 0..a.rows {
                if used_rows[i] {
                    continue;
                }
                let factor = a[(i, pj)] / pivot;
                for j in 0..a.cols {
                    let v = a[(pi, j)];
                    a[(i, j)] -= factor * v;
                }
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

/// A symmetric matrix; construction symmetrizes via (A + A')/2 and rejects
/// inputs whose asymmetry exceeds a small relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: Matrix,
}

impl SymMatrix {
    pub fn new(a: Matrix) -> Result<Self> {
        if a.rows() != a.cols() || a.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let scale = a.max_abs();
        let mut worst = 0.0f64;
        for i in 0..a.rows() {
            for j in (i + 1)..a.cols() {
                worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        if scale > 0.0 && worst / scale > SYM_TOL {
            return Err(Error::AsymmetricInput(worst / scale));
        }
        let mut m = a;
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(SymMatrix { m })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        SymMatrix::new(Matrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix { m: Matrix::identity(dim) }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        SymMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        self.m.mul_vec(v)
    }

    /// Quadratic form v' A v.
    pub fn quad(&self, v: &Vector) -> f64 {
        v.dot(&self.mul_vec(v))
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(self)
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.m[ij]
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
///
/// Construction fails with `NotPositiveDefinite` when the smallest pivot falls
/// below `PD_PIVOT_RATIO` times the largest diagonal entry; no regularization
/// is applied.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
        let threshold = PD_PIVOT_RATIO * max_diag;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > threshold) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: d, threshold });
            }
            let lj = d.sqrt();
            l[(j, j)] = lj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / lj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// log-determinant of the factored matrix.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    pub fn solve_vec(&self, b: &Vector) -> Vector {
        let n = self.dim();
        assert_eq!(b.dim(), n, "solve dimension mismatch");
        let mut y = b.0.clone();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[(i, k)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[(k, i)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        Vector(y)
    }

    pub fn solve_mat(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "solve dimension mismatch");
        let mut out = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col = Vector((0..n).map(|i| b[(i, j)]).collect());
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// Explicit inverse of the factored matrix, returned symmetric.
    pub fn inverse(&self) -> SymMatrix {
        let inv = self.solve_mat(&Matrix::identity(self.dim()));
        // solve of an SPD system against I is symmetric up to rounding
        SymMatrix::new(inv).expect("inverse of SPD matrix is symmetric")
    }
}

/// Solves A x = b for SPD `A`.
pub fn spd_solve_vec(a: &SymMatrix, b: &Vector) -> Result<Vector> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve: {}x{} vs {}",
            a.dim(),
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.cholesky()?.solve_vec(b))
}

/// Solves A X = B for SPD `A`.
pub fn spd_solve_mat(a: &SymMatrix, b: &Matrix) -> Result<Matrix> {
    if a.dim() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve: {}x{} vs {}x{}",
            a.dim(),
            a.dim(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(a.cholesky()?.solve_mat(b))
}
