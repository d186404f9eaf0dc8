//! Small dense linear algebra and convex feasibility kernels.
//!
//! Everything here targets desk-scale problems (orders up to a few tens):
//! a row-major [`Matrix`], a structurally symmetric [`SymMatrix`] stored as
//! a packed lower triangle, a cyclic Jacobi eigensolver, a Cholesky
//! factorization in the `P = LᵀL` convention, a Gelfand-style spectral
//! radius bracket, and an ellipsoid-method feasibility/minimization engine
//! for affine matrix inequalities.

mod chol;
mod eig;
mod ellipsoid;
mod growth;

pub use chol::{cholesky, CholeskyFactor};
pub use eig::{condition_number, sym_eigs, sym_eigs_full};
pub use ellipsoid::{
    conic_feasible, minimize_constrained, minimize_subgradient, AffineMatrixConstraint,
    ConstrainedEval, Feasibility, MinimizeOutcome, DEFAULT_FEASIBILITY_TOL, DEFAULT_RADIUS_BOUND,
};
pub use growth::growth_rate;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension mismatch: {0}")]
    BadDimension(String),
    #[error("value overflowed the representable range")]
    Overflow,
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    /// Column vector from a slice.
    pub fn column(x: &[f64]) -> Self {
        Self { rows: x.len(), cols: 1, data: x.to_vec() }
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions disagree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "vector length disagrees");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|v| v * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest singular value, via the symmetric eigenproblem on `AᵀA`.
    pub fn spectral_norm(&self) -> f64 {
        let gram = if self.rows >= self.cols {
            self.transpose().mul(self)
        } else {
            self.mul(&self.transpose())
        };
        let sym = SymMatrix::from_dense_symmetrized(&gram);
        match sym_eigs(&sym) {
            Ok(eigs) => eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
            Err(_) => self.frobenius_norm(),
        }
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve_multi(&self, rhs: &Matrix) -> Result<Matrix, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::BadDimension("solve needs a square matrix".into()));
        }
        if rhs.rows != self.rows {
            return Err(NumericsError::BadDimension("right-hand side height disagrees".into()));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let bc = rhs.cols;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= f64::MIN_POSITIVE * 16.0 {
                return Err(NumericsError::Singular(col));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                for j in 0..bc {
                    b.swap(col * bc + j, piv * bc + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..bc {
                    b[r * bc + j] -= f * b[col * bc + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..bc {
                let mut s = b[col * bc + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * b[k * bc + j];
                }
                b[col * bc + j] = s / d;
            }
        }
        Ok(Matrix { rows: n, cols: bc, data: b })
    }
}

/// Symmetric matrix in packed lower-triangle storage: entry `(i, j)` with
/// `i ≥ j` lives at `i(i+1)/2 + j`, so `(i, j)` and `(j, i)` are the same
/// slot and symmetry cannot drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self { order, data: vec![0.0; order * (order + 1) / 2] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[packed_index(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                m.data[packed_index(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row nests, averaging `(i,j)` and `(j,i)`.
    pub fn from_rows_symmetrized(rows: &[Vec<f64>]) -> Self {
        let m = Matrix::from_rows(rows);
        Self::from_dense_symmetrized(&m)
    }

    pub fn from_dense_symmetrized(m: &Matrix) -> Self {
        assert!(m.is_square(), "symmetric matrix needs a square source");
        Self::from_fn(m.rows(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
    }

    /// The packed lower triangle, row by row. This is exactly the `vech`
    /// ordering used by the feasibility engine's decision vectors.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn from_packed(order: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), order * (order + 1) / 2, "packed buffer has wrong length");
        Self { order, data }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed_index(i, j)] = v;
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.order;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Self { order: self.order, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { order: self.order, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().frobenius_norm()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Quadratic form `xᵀ P x` with a fixed summation order.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.order);
        let mut acc = 0.0;
        for i in 0..self.order {
            acc += self.get(i, i) * x[i] * x[i];
            for j in 0..i {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }

    /// Number of free entries of a symmetric matrix of this order.
    pub fn vech_len(order: usize) -> usize {
        order * (order + 1) / 2
    }

    /// Coefficients `c` such that `xᵀPx = c · vech(P)` in packed order.
    pub fn quad_form_coefficients(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut c = vec![0.0; Self::vech_len(n)];
        for i in 0..n {
            for j in 0..=i {
                c[packed_index(i, j)] = if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] };
            }
        }
        c
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
