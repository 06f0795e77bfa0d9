//! Complex matrices for frequency-response work.
//!
//! Everything reduces to real arithmetic: linear solves embed `(X + jY) z = b` as a
//! `2n x 2n` real system, and Hermitian eigenvalues use the standard symmetric
//! embedding `[[X, -Y], [Y, X]]`, whose spectrum repeats each eigenvalue of the
//! Hermitian matrix twice.

use crate::error::{Error, Result};
use crate::mat::Matrix;
use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_real(a: &Matrix) -> Self {
        let mut m = ComplexMatrix::zeros(a.rows(), a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                m[(i, j)] = Complex64::new(a[(i, j)], 0.0);
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> Self {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn real_part(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    pub fn imag_part(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].im)
    }

    /// Hermitian defect `max |m_ij - conj(m_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.rows == self.cols);
        let mut d = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Solve `M z = b` for each column of `b` via the `2n x 2n` real embedding.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows != self.cols {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        assert_eq!(self.rows, b.rows, "solve shape mismatch");
        let n = self.rows;
        let x = self.real_part();
        let y = self.imag_part();
        let embedded = Matrix::block2x2(&x, &y.scale(-1.0), &y, &x);
        let lu = embedded.lu()?;
        let mut out = ComplexMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let mut rhs = vec![0.0; 2 * n];
            for i in 0..n {
                rhs[i] = b[(i, j)].re;
                rhs[n + i] = b[(i, j)].im;
            }
            let sol = lu.solve_vec(&rhs);
            for i in 0..n {
                out[(i, j)] = Complex64::new(sol[i], sol[n + i]);
            }
        }
        Ok(out)
    }

    /// Singular values (descending) via the symmetric eigendecomposition of the real
    /// embedding of `M^H M`; used for frequency-wise rank tests.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let gram = self.adjoint().matmul(self);
        let mut eigs = hermitian_eigenvalues(&gram)?;
        eigs.reverse();
        Ok(eigs.into_iter().map(|l| l.max(0.0).sqrt()).collect())
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix through the real symmetric
/// embedding `[[X, -Y], [Y, X]]`, whose doubled spectrum is collapsed pairwise.
///
/// Inputs with Hermitian defect above `1e-9` (relative) are rejected; smaller
/// defects are projected onto the Hermitian part `(M + M^H)/2` first.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.rows != m.cols {
        return Err(Error::NonSquare { rows: m.rows, cols: m.cols });
    }
    let defect = m.hermitian_defect();
    if defect > 1e-9 * (1.0 + m.max_abs()) {
        return Err(Error::NotSymmetric { defect });
    }
    let herm = ComplexMatrix::from_fn(m.rows, m.cols, |i, j| {
        0.5 * (m[(i, j)] + m[(j, i)].conj())
    });
    let x = herm.real_part();
    let y = herm.imag_part();
    let embedded = Matrix::block2x2(&x, &y.scale(-1.0), &y, &x);
    let eig = crate::eig::sym_eig(&embedded)?;
    // sorted spectrum holds each eigenvalue exactly twice; average adjacent pairs
    let n = m.rows;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(0.5 * (eig.eigenvalues[2 * k] + eig.eigenvalues[2 * k + 1]));
    }
    Ok(out)
}

pub fn hermitian_lambda_min(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
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
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
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
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
