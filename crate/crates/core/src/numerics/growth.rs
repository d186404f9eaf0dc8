//! Spectral-radius bracket by repeated squaring.
//!
//! For a single square matrix `A` the asymptotic growth rate is its
//! spectral radius `ρ(A)`. Repeated squaring gives `A^(2^j)` cheaply;
//! `‖A^(2^j)‖₂^(1/2^j)` upper-bounds `ρ(A)` for every `j`, while
//! `(|trace(A^(2^j))|/n)^(1/2^j)` and a Rayleigh-quotient magnitude from a
//! seeded power iteration bound it from below. Intermediate matrices are
//! renormalized with log-scale bookkeeping, so the bracket survives
//! budgets far beyond what raw `f64` powers could represent.

use super::{dot, norm, Matrix, NumericsError};

const POWER_ITERATIONS: usize = 60;

/// Returns `(lower, upper)` with `lower ≤ ρ(A) ≤ upper`. A larger
/// `budget` (number of squarings) narrows the bracket.
pub fn growth_rate(a: &Matrix, budget: u32) -> Result<(f64, f64), NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::BadDimension("growth_rate needs a square matrix".into()));
    }
    if budget < 1 {
        return Err(NumericsError::BadDimension("budget must be at least 1".into()));
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::Overflow);
    }
    let n = a.rows();
    if n == 0 {
        return Ok((0.0, 0.0));
    }

    // Invariant: A^(2^j) = exp(log_scale) * s, with ‖s‖_F = 1.
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut s = a.scale(1.0 / fro);
    let mut log_scale = fro.ln();
    let mut inv_pow = 1.0; // 1 / 2^j

    let mut upper = bound_from(log_scale, s.spectral_norm(), inv_pow);
    let mut lower: f64 = 0.0;
    if let Some(t) = trace_bound(&s, n, log_scale, inv_pow) {
        lower = lower.max(t);
    }

    for _ in 0..budget {
        let sq = s.mul(&s);
        let f = sq.frobenius_norm();
        if !f.is_finite() {
            return Err(NumericsError::Overflow);
        }
        if f == 0.0 {
            // A power vanished exactly: the matrix is nilpotent.
            return Ok((0.0, 0.0));
        }
        s = sq.scale(1.0 / f);
        log_scale = 2.0 * log_scale + f.ln();
        inv_pow *= 0.5;

        upper = upper.min(bound_from(log_scale, s.spectral_norm(), inv_pow));
        if let Some(t) = trace_bound(&s, n, log_scale, inv_pow) {
            lower = lower.max(t);
        }
    }

    // Rayleigh refinement on the final normalized power. The quotient is
    // only a heuristic for nonsymmetric inputs, so it is clamped to the
    // certified upper bound.
    if let Some(r) = rayleigh_estimate(&s) {
        let cand = bound_from(log_scale, r, inv_pow);
        lower = lower.max(cand.min(upper));
    }

    Ok((lower.min(upper), upper))
}

fn bound_from(log_scale: f64, factor: f64, inv_pow: f64) -> f64 {
    if factor <= 0.0 {
        0.0
    } else {
        ((log_scale + factor.ln()) * inv_pow).exp()
    }
}

fn trace_bound(s: &Matrix, n: usize, log_scale: f64, inv_pow: f64) -> Option<f64> {
    let t = s.trace().abs() / n as f64;
    (t > 0.0).then(|| bound_from(log_scale, t, inv_pow))
}

fn rayleigh_estimate(s: &Matrix) -> Option<f64> {
    let n = s.rows();
    // Fixed seed vector; any deterministic nonzero start works.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    let nv = norm(&v);
    if nv == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    for _ in 0..POWER_ITERATIONS {
        let w = s.mul_vec(&v);
        let nw = norm(&w);
        if nw <= f64::MIN_POSITIVE {
            return None;
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    let sv = s.mul_vec(&v);
    Some(dot(&v, &sv).abs())
}
