//! Dense real matrices in row-major storage, with the handful of factorizations the
//! rest of the crate needs: LU with partial pivoting for solves, determinants and
//! inverses. Eigenvalue routines live in [`crate::eig`].
//!
//! The systems analysed here are desk-scale (state dimension below ten), so the
//! kernel favours clarity over blocking or SIMD tricks. Shape violations are
//! programming errors and panic; rank and conditioning problems are reported as
//! [`Error`](crate::Error) values by the factorization entry points.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Dense `rows x cols` matrix of `f64`, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix. Both dimensions must be positive.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square diagonal matrix from the given entries.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "matrix needs at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    /// Build entry-wise from a closure `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[f64]) -> Self {
        Matrix::from_fn(v.len(), 1, |i, _| v[i])
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

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product; panics when inner dimensions disagree.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
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

    /// Matrix–vector product returning a plain `Vec`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Matrix {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Maximum absolute asymmetry `max_ij |a_ij - a_ji|`; zero for non-square input
    /// never arises because the call asserts squareness.
    pub fn symmetry_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Assemble a block matrix from a 2x2 arrangement; row/column counts must be
    /// consistent along each band.
    pub fn block2x2(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Matrix {
        assert_eq!(a.rows, b.rows, "top blocks disagree in rows");
        assert_eq!(c.rows, d.rows, "bottom blocks disagree in rows");
        assert_eq!(a.cols, c.cols, "left blocks disagree in cols");
        assert_eq!(b.cols, d.cols, "right blocks disagree in cols");
        Matrix::from_fn(a.rows + c.rows, a.cols + b.cols, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - a.cols)],
            (false, true) => c[(i - a.rows, j)],
            (false, false) => d[(i - a.rows, j - a.cols)],
        })
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs().max(1.0);
        for k in 0..n {
            // pivot search in column k
            let (mut pivot_row, mut pivot_val) = (k, lu[(k, k)].abs());
            for i in (k + 1)..n {
                if lu[(i, k)].abs() > pivot_val {
                    pivot_row = i;
                    pivot_val = lu[(i, k)].abs();
                }
            }
            if pivot_val <= 1e-14 * scale {
                return Err(Error::SingularMatrix);
            }
            if pivot_row != k {
                for j in 0..n {
                    let (a, b) = (lu[(k, j)], lu[(pivot_row, j)]);
                    lu[(k, j)] = b;
                    lu[(pivot_row, j)] = a;
                }
                perm.swap(k, pivot_row);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let sub = factor * lu[(k, j)];
                    lu[(i, j)] -= sub;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    /// Solve `A x = b` for each column of `b`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let lu = self.lu()?;
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = lu.solve_vec(&b.column(j));
            for i in 0..b.rows() {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.lu()?.solve_vec(b))
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.rows))
    }

    /// Determinant via LU; returns 0 when the factorization detects singularity.
    pub fn det(&self) -> f64 {
        match self.lu() {
            Ok(lu) => {
                let mut d = lu.sign;
                for i in 0..lu.lu.rows() {
                    d *= lu.lu[(i, i)];
                }
                d
            }
            Err(_) => 0.0,
        }
    }
}

/// LU factorization bundle produced by [`Matrix::lu`].
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Back-substitution for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

// Small vector helpers used throughout the crate.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solves_to_rhs() {
        let i3 = Matrix::identity(3);
        let b = vec![1.0, -2.0, 5.5];
        assert_eq!(i3.solve_vec(&b).unwrap(), b);
    }

    #[test]
    fn lu_solve_recovers_known_solution() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        // A * (1, -1) = (1, -2)
        let x = a.solve_vec(&[1.0, -2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_of_2x2() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert!((a.det() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(a.lu(), Err(Error::SingularMatrix)));
        assert_eq!(a.det(), 0.0);
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![-1.0, 3.0, 2.0], vec![0.5, 0.0, 1.0]]);
        let prod = &a.inverse().unwrap() * &a;
        let defect = (&prod - &Matrix::identity(3)).max_abs();
        assert!(defect < 1e-13, "defect {defect}");
    }

    #[test]
    fn block2x2_assembles_in_order() {
        let a = Matrix::from_rows(&[vec![1.0]]);
        let b = Matrix::from_rows(&[vec![2.0]]);
        let c = Matrix::from_rows(&[vec![3.0]]);
        let d = Matrix::from_rows(&[vec![4.0]]);
        let m = Matrix::block2x2(&a, &b, &c, &d);
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], 2.0);
        assert_eq!(m[(1, 0)], 3.0);
        assert_eq!(m[(1, 1)], 4.0);
    }
}
