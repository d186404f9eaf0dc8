//! Spherical-cap measure, covering/packing bounds, and the
//! sample-complexity confidence bound.
//!
//! The uniform measure of a symmetric spherical cap of half-angle `θ` in
//! `ℝⁿ` is `δ(θ) = I(sin²θ; (n−1)/2, 1/2)` with `I` the regularized
//! incomplete beta function, evaluated here by a continued fraction. The
//! confidence machinery combines `δ`, its inverse, and the covering bound
//! `B(ε; N) = M·(1 − δ(θ/2)/M)^N / δ(θ/4)` with `θ = δ⁻¹(ε)`: with
//! probability at least `1 − B(ε; N)`, `N` i.i.d. uniform draws on
//! `𝕊 × {1..M}` form an ε-covering.

use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("no epsilon in (0,1) reaches the target confidence; smallest achievable violation is {min_beta:.6e}")]
    NoSolution { min_beta: f64 },
}

/// A validated symmetric-cap specification: ambient dimension `n ≥ 2` and
/// half-angle `θ ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSpec {
    n: usize,
    theta: f64,
}

impl CapSpec {
    pub fn new(n: usize, theta: f64) -> Result<Self, GeometryError> {
        check_dim(n)?;
        if !(0.0..=FRAC_PI_2 + 1e-15).contains(&theta) {
            return Err(GeometryError::OutOfRange(format!(
                "theta {theta} outside [0, pi/2]"
            )));
        }
        Ok(Self { n, theta: theta.min(FRAC_PI_2) })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn measure(&self) -> f64 {
        cap_measure(self.n, self.theta).expect("validated spec")
    }
}

/// Whether a confidence query fixes the covering radius or the violation
/// probability; the other quantity is solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceTarget {
    /// Covering parameter ε in (0,1); the violation probability follows.
    Epsilon(f64),
    /// Violation probability β in (0,1); ε is found by bisection.
    Beta(f64),
}

/// Inputs of a certificate-confidence computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceQuery {
    pub dimension: usize,
    pub modes: usize,
    pub samples: usize,
    pub target: ConfidenceTarget,
}

impl ConfidenceQuery {
    /// Resolves the query to a concrete ε, bisecting when β is given.
    pub fn resolve_epsilon(&self) -> Result<f64, GeometryError> {
        match self.target {
            ConfidenceTarget::Epsilon(eps) => {
                check_unit_open(eps, "epsilon")?;
                Ok(eps)
            }
            ConfidenceTarget::Beta(beta) => {
                epsilon_for_confidence(self.dimension, self.modes, self.samples, beta)
            }
        }
    }
}

fn check_dim(n: usize) -> Result<(), GeometryError> {
    if n < 2 {
        return Err(GeometryError::OutOfRange(format!("dimension {n} must be at least 2")));
    }
    Ok(())
}

fn check_unit_open(x: f64, name: &str) -> Result<(), GeometryError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(GeometryError::OutOfRange(format!("{name} {x} outside (0,1)")));
    }
    Ok(())
}

/// Measure of the symmetric spherical cap with half-angle `theta` in
/// dimension `n`: strictly increasing, `δ(0) = 0`, `δ(π/2) = 1`.
pub fn cap_measure(n: usize, theta: f64) -> Result<f64, GeometryError> {
    check_dim(n)?;
    if !theta.is_finite() || theta < 0.0 || theta > FRAC_PI_2 + 1e-15 {
        return Err(GeometryError::OutOfRange(format!("theta {theta} outside [0, pi/2]")));
    }
    if theta <= 0.0 {
        return Ok(0.0);
    }
    if theta >= FRAC_PI_2 {
        return Ok(1.0);
    }
    let s = theta.sin();
    Ok(regularized_incomplete_beta(s * s, (n as f64 - 1.0) / 2.0, 0.5))
}

/// Inverse cap measure: the `theta` with `cap_measure(n, theta) = eps`,
/// found by bisection on the monotone measure.
pub fn cap_measure_inv(n: usize, eps: f64) -> Result<f64, GeometryError> {
    check_dim(n)?;
    check_unit_open(eps, "eps")?;
    let mut lo = 0.0f64;
    let mut hi = FRAC_PI_2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = cap_measure(n, mid)?;
        if v < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper bound `1/δ(½·δ⁻¹(ε))` on both the covering and the packing
/// number of the sphere at scale ε.
pub fn packing_bound(n: usize, eps: f64) -> Result<f64, GeometryError> {
    let theta = cap_measure_inv(n, eps)?;
    Ok(1.0 / cap_measure(n, 0.5 * theta)?)
}

/// The covering-failure probability bound
/// `B(ε;N) = M(1 − δ(θ/2)/M)^N / δ(θ/4)` with `θ = δ⁻¹(ε)`. May exceed 1,
/// in which case the certificate it feeds is vacuous but still reported.
pub fn confidence_violation(
    n: usize,
    modes: usize,
    samples: usize,
    eps: f64,
) -> Result<f64, GeometryError> {
    if modes < 1 {
        return Err(GeometryError::OutOfRange("mode count must be at least 1".into()));
    }
    if samples < 1 {
        return Err(GeometryError::OutOfRange("sample count must be at least 1".into()));
    }
    let theta = cap_measure_inv(n, eps)?;
    let m = modes as f64;
    let half = cap_measure(n, 0.5 * theta)?;
    let quarter = cap_measure(n, 0.25 * theta)?;
    if quarter <= 0.0 {
        return Ok(f64::INFINITY);
    }
    // (1 − δ/M)^N through the log for accuracy at large N.
    let log_decay = (samples as f64) * (-half / m).ln_1p();
    Ok(m * log_decay.exp() / quarter)
}

/// Solves `confidence_violation(n, M, N, ε) = beta` for ε by bisection,
/// exploiting that the bound decreases in ε. Fails with
/// [`GeometryError::NoSolution`] when even ε → 1 cannot reach `beta`
/// (too few samples); the error carries the smallest achievable value.
pub fn epsilon_for_confidence(
    n: usize,
    modes: usize,
    samples: usize,
    beta: f64,
) -> Result<f64, GeometryError> {
    check_unit_open(beta, "beta")?;
    let hi_probe = 1.0 - 1e-12;
    let at_hi = confidence_violation(n, modes, samples, hi_probe)?;
    if at_hi > beta {
        return Err(GeometryError::NoSolution { min_beta: at_hi });
    }
    let mut lo = 1e-300;
    let mut hi = hi_probe;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = confidence_violation(n, modes, samples, mid)?;
        if v > beta {
            lo = mid;
        } else {
            hi = mid;
        }
        if (v - beta).abs() <= 1e-13 {
            return Ok(mid);
        }
    }
    Ok(hi)
}

/// The audit trail of an ε resolution: every intermediate quantity in the
/// confidence bound, so discrepancies against external reports can be
/// traced term by term.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EpsilonChain {
    pub epsilon: f64,
    pub theta: f64,
    pub delta_half: f64,
    pub delta_quarter: f64,
}

pub fn epsilon_chain(n: usize, eps: f64) -> Result<EpsilonChain, GeometryError> {
    let theta = cap_measure_inv(n, eps)?;
    Ok(EpsilonChain {
        epsilon: eps,
        theta,
        delta_half: cap_measure(n, 0.5 * theta)?,
        delta_quarter: cap_measure(n, 0.25 * theta)?,
    })
}

/// Regularized incomplete beta `I(x; a, b)` by the modified Lentz
/// continued fraction, with the symmetry switch at `x > (a+1)/(a+b+2)`.
fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_cf_prefixed(1.0 - x, b, a)
    } else {
        beta_cf_prefixed(x, a, b)
    }
}

fn beta_cf_prefixed(x: f64, a: f64, b: f64) -> f64 {
    let ln_prefix = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    (ln_prefix.exp() / a) * beta_continued_fraction(x, a, b)
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation (g = 7, 9 terms), |rel. err.| below 1e-13 on the
/// positive axis.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection for the small-argument range.
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn planar_cap_measure_matches_the_arc_fraction() {
        // In dimension 2 the measure is 2θ/π.
        for i in 0..=1000 {
            let theta = FRAC_PI_2 * i as f64 / 1000.0;
            let want = 2.0 * theta / PI;
            let got = cap_measure(2, theta).unwrap();
            assert!((got - want).abs() < 1e-10, "theta={theta}: {got} vs {want}");
        }
    }

    #[test]
    fn spatial_cap_measure_matches_the_height_fraction() {
        // In dimension 3 the measure is 1 − cos θ.
        for i in 0..=1000 {
            let theta = FRAC_PI_2 * i as f64 / 1000.0;
            let want = 1.0 - theta.cos();
            let got = cap_measure(3, theta).unwrap();
            assert!((got - want).abs() < 1e-10, "theta={theta}: {got} vs {want}");
        }
    }

    #[test]
    fn full_cap_has_unit_measure_in_any_dimension() {
        for n in 2..12 {
            assert_eq!(cap_measure(n, FRAC_PI_2).unwrap(), 1.0);
            assert_eq!(cap_measure(n, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn inverse_recovers_the_planar_and_spatial_angles() {
        assert!((cap_measure_inv(2, 0.5).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((cap_measure_inv(3, 0.5).unwrap() - FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        for n in [2usize, 3, 4, 7] {
            for i in 1..40 {
                let theta = FRAC_PI_2 * i as f64 / 40.0 * 0.999;
                let eps = cap_measure(n, theta).unwrap();
                let back = cap_measure_inv(n, eps).unwrap();
                assert!((back - theta).abs() < 1e-9, "n={n} theta={theta} back={back}");
            }
        }
    }

    #[test]
    fn measure_decreases_with_dimension() {
        let theta = 0.7;
        let mut prev = cap_measure(2, theta).unwrap();
        for n in 3..10 {
            let cur = cap_measure(n, theta).unwrap();
            assert!(cur < prev, "measure should shrink with n");
            prev = cur;
        }
    }

    #[test]
    fn packing_bound_closed_forms() {
        // n=2: 1/δ(π/8) = 1/(1/4) = 4.
        assert!((packing_bound(2, 0.5).unwrap() - 4.0).abs() < 1e-10);
        // n=3: 1/(1 − cos(π/6)).
        let want = 1.0 / (1.0 - (PI / 6.0).cos());
        assert!((packing_bound(3, 0.5).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn packing_bound_decreases_in_eps() {
        let coarse = packing_bound(3, 0.6).unwrap();
        let fine = packing_bound(3, 0.2).unwrap();
        assert!(fine >= coarse);
    }

    #[test]
    fn confidence_violation_closed_form() {
        // n=2, M=1, ε=0.5: δ(θ/2)=1/4, δ(θ/4)=1/8, so B = 8·0.75^10.
        let want = 8.0 * 0.75f64.powi(10);
        let got = confidence_violation(2, 1, 10, 0.5).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn confidence_violation_decays_in_samples_and_eps() {
        let mut prev = f64::INFINITY;
        for samples in [10, 100, 1000, 10_000] {
            let v = confidence_violation(2, 3, samples, 0.05).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for eps in [0.01, 0.05, 0.2, 0.5, 0.9] {
            let v = confidence_violation(2, 3, 500, eps).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn epsilon_solution_round_trips_to_beta() {
        let eps = epsilon_for_confidence(2, 3, 1000, 0.01).unwrap();
        let beta = confidence_violation(2, 3, 1000, eps).unwrap();
        assert!((beta - 0.01).abs() < 1e-9, "forward check gives {beta}");
    }

    #[test]
    fn epsilon_solution_matches_an_independent_planar_model() {
        // For n=2 the chain collapses to B(ε) = 4M(1 − ε/(2M))^N/ε,
        // solvable by bisection on the closed form alone.
        let (n, m, samples, beta) = (2usize, 3usize, 1000usize, 0.01f64);
        let closed = |eps: f64| -> f64 {
            let mf = m as f64;
            4.0 * mf * (1.0 - eps / (2.0 * mf)).powi(samples as i32) / eps
        };
        let mut lo = 1e-12;
        let mut hi = 1.0 - 1e-12;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if closed(mid) > beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = epsilon_for_confidence(n, m, samples, beta).unwrap();
        assert!(
            (got - oracle).abs() < 1e-9,
            "bisection {got} vs closed-form {oracle}"
        );
    }

    #[test]
    fn too_few_samples_has_no_solution() {
        match epsilon_for_confidence(2, 3, 10, 0.01) {
            Err(GeometryError::NoSolution { min_beta }) => assert!(min_beta > 0.01),
            other => panic!("expected NoSolution, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        assert!(cap_measure(1, 0.3).is_err());
        assert!(cap_measure(3, -0.1).is_err());
        assert!(cap_measure(3, 2.0).is_err());
        assert!(cap_measure_inv(3, 0.0).is_err());
        assert!(cap_measure_inv(3, 1.0).is_err());
        assert!(epsilon_for_confidence(2, 3, 100, 0.0).is_err());
    }

    #[test]
    fn cap_spec_validates_and_measures() {
        let spec = CapSpec::new(3, FRAC_PI_3).unwrap();
        assert!((spec.measure() - 0.5).abs() < 1e-12);
        assert!(CapSpec::new(3, -0.2).is_err());
    }
}
