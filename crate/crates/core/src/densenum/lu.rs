//! LU factorization with partial pivoting; solves, inverses, determinants.

use super::{pivot_eps, Matrix, NumError};

/// Packed LU factors of a square matrix with row-pivot record.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl LuFactors {
    /// Factor `P a = L U`. Fails with `SingularMatrix` when a pivot magnitude
    /// falls at or below `1e-12 * max|a|`.
    pub fn factor(a: &Matrix) -> Result<Self, NumError> {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows();
        let eps = pivot_eps(a.norm_max());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= eps {
                return Err(NumError::SingularMatrix);
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / piv;
                lu[(i, k)] = m;
                for j in (k + 1)..n {
                    lu[(i, j)] -= m * lu[(k, j)];
                }
            }
        }
        Ok(LuFactors { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solve `a X = rhs` for each column of `rhs`.
    pub fn solve(&self, rhs: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(rhs.rows(), n, "rhs row count must match");
        let m = rhs.cols();
        let mut x = Matrix::zeros(n, m);
        // apply row permutation
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = rhs[(self.perm[i], j)];
            }
        }
        // forward substitution (unit lower)
        for i in 1..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == 0.0 {
                    continue;
                }
                for j in 0..m {
                    x[(i, j)] -= l * x[(k, j)];
                }
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                if u == 0.0 {
                    continue;
                }
                for j in 0..m {
                    x[(i, j)] -= u * x[(k, j)];
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        self.solve(&Matrix::identity(self.dim()))
    }

    pub fn det(&self) -> f64 {
        let mut d = self.sign;
        for i in 0..self.dim() {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// Solve `a X = rhs`; `X` satisfies `max|a X - rhs| <= TOL_SOLVE * (1 + max|rhs|)`
/// for well-conditioned desk-scale inputs.
pub fn solve_linear(a: &Matrix, rhs: &Matrix) -> Result<Matrix, NumError> {
    Ok(LuFactors::factor(a)?.solve(rhs))
}

/// Matrix inverse via LU.
pub fn invert(a: &Matrix) -> Result<Matrix, NumError> {
    Ok(LuFactors::factor(a)?.inverse())
}

/// Determinant via LU; returns 0.0 for matrices flagged singular.
pub fn det(a: &Matrix) -> f64 {
    match LuFactors::factor(a) {
        Ok(f) => f.det(),
        Err(_) => 0.0,
    }
}
