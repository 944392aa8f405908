//! Self-contained dense linear-algebra kernels.
//!
//! Row-major `f64` matrices with the handful of factorizations the rest of
//! the crate needs: LU with partial pivoting ([`solve_linear`], [`invert`],
//! [`det`]), a cyclic Jacobi eigensolver for symmetric matrices
//! ([`sym_eig`], [`sym_inv_sqrt`]), and Hessenberg reduction plus Francis
//! double-shift QR for general real spectra ([`general_eig`]). Everything is
//! sized for desk-scale problems (dimension up to a few hundred); no
//! sparsity, no preconditioning, no extended precision.
//!
//! All operations are pure functions of their inputs and safe to call
//! concurrently.

mod jacobi;
mod lu;
mod schur;

pub use jacobi::{max_eig_sym, sym_eig, sym_inv_sqrt};
pub use lu::{det, invert, solve_linear, LuFactors};
pub use schur::general_eig;

use std::fmt;
use std::ops::{Index, IndexMut};

/// Residual tolerance for linear solves and inverses.
pub const TOL_SOLVE: f64 = 1e-10;
/// Reconstruction/orthogonality tolerance for eigendecompositions.
pub const TOL_EIG: f64 = 1e-9;

/// Pivot threshold below which an LU factorization reports `SingularMatrix`.
pub fn pivot_eps(norm_max: f64) -> f64 {
    1e-12 * norm_max
}

/// Symmetry tolerance: `a` counts as symmetric when
/// `max |a - a^T| <= sym_tol(max |a|)`.
pub fn sym_tol(norm_max: f64) -> f64 {
    1e-10 * (1.0 + norm_max)
}

/// Errors from the numeric kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum NumError {
    /// A pivot fell below the singularity threshold.
    SingularMatrix,
    /// Input failed the symmetry tolerance check.
    NotSymmetric,
    /// Input is not positive definite within tolerance.
    NotPositiveDefinite,
    /// An iterative eigensolver hit its iteration cap.
    NoConvergence,
}

impl fmt::Display for NumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumError::SingularMatrix => write!(f, "matrix is singular to working precision"),
            NumError::NotSymmetric => write!(f, "matrix is not symmetric within tolerance"),
            NumError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            NumError::NoConvergence => write!(f, "eigensolver did not converge"),
        }
    }
}

impl std::error::Error for NumError {}

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
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

    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Matrix { rows, cols, data }
    }

    /// Build from a slice of rows, mostly for tests and fixtures.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
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

    /// Column vector from a slice.
    pub fn col_vec(v: &[f64]) -> Self {
        Matrix::from_vec(v.len(), 1, v.to_vec())
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * out.cols..(i + 1) * out.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += aik * b;
                }
            }
        }
        out
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
            data: self.data.iter().map(|x| x * s).collect(),
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

    /// Largest absolute entry.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Euclidean norm of the entries (Frobenius; the vector 2-norm for
    /// column vectors).
    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute entrywise difference.
    pub fn max_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Max asymmetry `max |a[i,j] - a[j,i]|`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Copy of the `rows x cols` block with upper-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Overwrite the block with upper-left corner `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// One eigenvalue of a real matrix. Complex eigenvalues come in conjugate
/// pairs within any returned set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEigenvalue {
    pub re: f64,
    pub im: f64,
}

impl ComplexEigenvalue {
    pub fn real(re: f64) -> Self {
        ComplexEigenvalue { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn dist(&self, other: &ComplexEigenvalue) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

/// Spectral radius: maximum modulus over a set of eigenvalues.
pub fn spectral_radius(eigs: &[ComplexEigenvalue]) -> f64 {
    eigs.iter().fold(0.0, |m, e| m.max(e.modulus()))
}
