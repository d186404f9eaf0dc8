//! Cholesky factorization in the `P = LᵀL` convention.
//!
//! Note the convention: this module returns the factor `L` satisfying
//! `LᵀL = P`, which is the *transpose* of the lower-triangular factor `C`
//! in the more common `P = CCᵀ` form. `L` is therefore upper triangular
//! with a positive diagonal. The `LᵀL` form is what the certification
//! arguments use: `‖Lx‖² = xᵀPx`.

use super::{Matrix, NumericsError, SymMatrix};

/// Smallest admissible pivot before the input is declared indefinite.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Triangular factor of a positive definite matrix, `P = LᵀL`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    /// The factor `L` (upper triangular, positive diagonal).
    pub fn matrix(&self) -> &Matrix {
        &self.l
    }

    /// `L x`, so that `‖apply(x)‖² = xᵀPx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.l.mul_vec(x)
    }

    pub fn order(&self) -> usize {
        self.l.rows()
    }
}

/// Factors a symmetric positive definite matrix as `P = LᵀL`.
///
/// Fails with [`NumericsError::NotPositiveDefinite`] when an elimination
/// pivot falls at or below [`PIVOT_FLOOR`].
pub fn cholesky(p: &SymMatrix) -> Result<CholeskyFactor, NumericsError> {
    let n = p.order();
    // Standard lower factor C with P = CCᵀ; returned as L = Cᵀ.
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = p.get(i, j);
            for k in 0..j {
                s -= c.get(i, k) * c.get(j, k);
            }
            if i == j {
                if s <= PIVOT_FLOOR {
                    return Err(NumericsError::NotPositiveDefinite { index: i, pivot: s });
                }
                c.set(i, i, s.sqrt());
            } else {
                c.set(i, j, s / c.get(j, j));
            }
        }
    }
    Ok(CholeskyFactor { l: c.transpose() })
}
