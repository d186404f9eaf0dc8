//! Cyclic Jacobi eigensolver for small symmetric matrices.

use super::{Matrix, NumericsError, SymMatrix};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in nondecreasing order.
pub fn sym_eigs(p: &SymMatrix) -> Result<Vec<f64>, NumericsError> {
    sym_eigs_full(p).map(|(vals, _)| vals)
}

/// Condition number `λ_max(P)/λ_min(P)` of a positive definite matrix.
pub fn condition_number(p: &SymMatrix) -> Result<f64, NumericsError> {
    let eigs = sym_eigs(p)?;
    let (min, max) = (eigs[0], eigs[eigs.len() - 1]);
    if min <= 0.0 {
        return Err(NumericsError::NotPositiveDefinite { index: 0, pivot: min });
    }
    Ok(max / min)
}

/// Eigenvalues (nondecreasing) and the matching orthonormal eigenvectors,
/// stored as the columns of the returned matrix.
///
/// Cyclic-by-row Jacobi rotations; converged when the off-diagonal
/// Frobenius mass drops below `1e-12` times the Frobenius norm of the
/// input.
pub fn sym_eigs_full(p: &SymMatrix) -> Result<(Vec<f64>, Matrix), NumericsError> {
    let n = p.order();
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let mut a = p.to_dense();
    let mut v = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![a.get(0, 0)], v));
    }

    let scale = a.frobenius_norm();
    let target = 1e-12 * scale;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target || off == 0.0 {
            return Ok(sorted_eigenpairs(&a, &v));
        }
        for q in 1..n {
            for pi in 0..q {
                let apq = a.get(pi, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(pi, pi);
                let aqq = a.get(q, q);
                // Rotation angle zeroing a[p][q].
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, pi, q, c, s);
            }
        }
    }
    // One last check before giving up.
    if off_diagonal_norm(&a) <= target {
        return Ok(sorted_eigenpairs(&a, &v));
    }
    Err(NumericsError::NoConvergence { sweeps: MAX_SWEEPS })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..i {
            let x = a.get(i, j);
            acc += 2.0 * x * x;
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

fn sorted_eigenpairs(a: &Matrix, v: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let vals = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vecs.set(row, col, v.get(row, src));
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dot;

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let p = SymMatrix::from_fn(2, |i, j| if i == j { [1.0, 5.0][i] } else { 0.0 });
        assert_eq!(sym_eigs(&p).unwrap(), vec![1.0, 5.0]);
    }

    #[test]
    fn two_by_two_hand_computed() {
        // [[2,1],[1,2]] has characteristic roots 1 and 3.
        let p = SymMatrix::from_rows_symmetrized(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let eigs = sym_eigs(&p).unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn published_lyapunov_matrix_touches_the_unit_floor() {
        // Oracle: quadratic formula on trace and determinant.
        let p = SymMatrix::from_rows_symmetrized(&[
            vec![4.3990, 6.7572],
            vec![6.7572, 14.4331],
        ]);
        let tr: f64 = 4.3990 + 14.4331;
        let det = 4.3990 * 14.4331 - 6.7572 * 6.7572;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let expected = [(tr - disc) / 2.0, (tr + disc) / 2.0];
        let eigs = sym_eigs(&p).unwrap();
        assert!((eigs[0] - expected[0]).abs() < 1e-10);
        assert!((eigs[1] - expected[1]).abs() < 1e-10);
        // The unit lower bound on P is active for this matrix.
        assert!((eigs[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn condition_number_basics() {
        assert_eq!(condition_number(&SymMatrix::identity(4)).unwrap(), 1.0);
        let d = SymMatrix::from_fn(2, |i, j| if i == j { [1.0, 10.0][i] } else { 0.0 });
        assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let indefinite = SymMatrix::from_rows_symmetrized(&[vec![1.0, 3.0], vec![3.0, 1.0]]);
        assert!(condition_number(&indefinite).is_err());
    }

    #[test]
    fn condition_number_of_the_published_matrix() {
        let p = SymMatrix::from_rows_symmetrized(&[
            vec![4.3990, 6.7572],
            vec![6.7572, 14.4331],
        ]);
        let eigs = sym_eigs(&p).unwrap();
        let want = eigs[1] / eigs[0];
        assert!((condition_number(&p).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn condition_number_is_scale_invariant() {
        let p = SymMatrix::from_rows_symmetrized(&[
            vec![3.0, 0.5, 0.0],
            vec![0.5, 2.0, -0.3],
            vec![0.0, -0.3, 1.2],
        ]);
        let base = condition_number(&p).unwrap();
        for c in [1e-4, 0.5, 7.0, 1e5] {
            let scaled = condition_number(&p.scale(c)).unwrap();
            assert!((scaled - base).abs() <= 1e-9 * base);
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_defining_relation() {
        let p = SymMatrix::from_rows_symmetrized(&[
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.7, -0.1],
            vec![-2.0, 0.7, 6.0, 1.1],
            vec![0.5, -0.1, 1.1, 2.0],
        ]);
        let (vals, vecs) = sym_eigs_full(&p).unwrap();
        let scale = p.frobenius_norm();
        for (k, &lambda) in vals.iter().enumerate() {
            let v: Vec<f64> = (0..4).map(|i| vecs.get(i, k)).collect();
            let pv = p.mul_vec(&v);
            let resid: f64 = pv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-9 * scale, "residual {resid} too large");
            assert!((dot(&v, &v) - 1.0).abs() < 1e-10);
        }
    }
}
