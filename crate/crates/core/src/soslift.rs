//! Degree-`d` monomial lifting for tighter analysis rates.
//!
//! The lift maps `x ∈ ℝⁿ` to the vector of all degree-`d` monomials
//! scaled by square-root multinomial coefficients, `x^[d]_α = √(α!)·x^α`,
//! in descending lexicographic exponent order (frozen for file-format
//! stability). The scaling makes the lift norm-compatible,
//! `‖x^[d]‖ = ‖x‖^d`, and every linear map `A` induces a unique lifted
//! map `A^[d]` with `A^[d] x^[d] = (Ax)^[d]`. Running the Lyapunov
//! feasibility step in lifted coordinates with the rate exponent `2d`
//! keeps the returned rate comparable to a spectral-radius bound and can
//! only tighten the quadratic answer.

use crate::numerics::{norm, Matrix, NumericsError, SymMatrix};
use crate::synthesis::{rate_bisection, Feedback, SolverConfig, SynthesisError};
use crate::system::{random_unit_vector, SampleSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest lifted dimension the feasibility engine accepts.
pub const MAX_LIFTED_DIM: usize = 30;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lifted dimension {dim} exceeds the engine cap {cap}")]
    EngineSizeCap { dim: usize, cap: usize },
    #[error("could not build a well-conditioned interpolation set for the lifted map")]
    BadInterpolation,
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which power of the rate multiplies the lifted quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateExponent {
    /// `γ^(2d)`: the returned rate bounds the growth per original step
    /// and is directly comparable to a spectral-radius bound.
    #[default]
    TwoD,
    /// `γ²`: the rate acts on the lifted step instead.
    Two,
}

/// The frozen basis of a degree-`d` lift in dimension `n`: exponent
/// multi-indices in descending lexicographic order and their
/// square-root-multinomial scalings.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftBasis {
    n: usize,
    degree: u32,
    exponents: Vec<Vec<u32>>,
    scalings: Vec<f64>,
}

impl LiftBasis {
    pub fn new(n: usize, degree: u32) -> Result<Self, SosError> {
        if n == 0 {
            return Err(SosError::DimensionMismatch("dimension must be positive".into()));
        }
        if degree == 0 {
            return Err(SosError::DimensionMismatch("degree must be at least 1".into()));
        }
        let mut exponents = Vec::new();
        let mut current = vec![0u32; n];
        enumerate_exponents(n, degree, 0, &mut current, &mut exponents);
        let scalings = exponents.iter().map(|a| multinomial(degree, a).sqrt()).collect();
        Ok(Self { n, degree, exponents, scalings })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Lifted dimension `D = C(n + d − 1, d)`.
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }
}

/// Descending lexicographic enumeration of all `α` with `Σαᵢ = degree`.
fn enumerate_exponents(
    n: usize,
    remaining: u32,
    pos: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        enumerate_exponents(n, remaining - e, pos + 1, current, out);
    }
}

/// Multinomial coefficient `d!/(α₁!···α_n!)`, exact in `f64` for the
/// degrees this module admits.
fn multinomial(degree: u32, alpha: &[u32]) -> f64 {
    let mut value = factorial(degree);
    for &a in alpha {
        value /= factorial(a);
    }
    value
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// The lifted vector `x^[d]` in basis order; satisfies
/// `‖x^[d]‖ = ‖x‖^d`.
pub fn lift_vector(x: &[f64], basis: &LiftBasis) -> Result<Vec<f64>, SosError> {
    if x.len() != basis.n {
        return Err(SosError::DimensionMismatch(format!(
            "vector has length {}, basis expects {}",
            x.len(),
            basis.n
        )));
    }
    Ok(basis
        .exponents
        .iter()
        .zip(&basis.scalings)
        .map(|(alpha, s)| {
            let mono: f64 = alpha
                .iter()
                .zip(x)
                .map(|(&a, &xi)| xi.powi(a as i32))
                .product();
            s * mono
        })
        .collect())
}

/// The unique linear map `A^[d]` with `A^[d]·x^[d] = (Ax)^[d]`,
/// constructed by evaluating the defining identity on a well-conditioned
/// set of sphere points and solving the resulting linear system.
pub fn lift_matrix(a: &Matrix, basis: &LiftBasis) -> Result<Matrix, SosError> {
    if !a.is_square() || a.rows() != basis.n {
        return Err(SosError::DimensionMismatch(format!(
            "matrix is {}x{}, basis expects order {}",
            a.rows(),
            a.cols(),
            basis.n
        )));
    }
    let d = basis.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5057_11F7);
    for _ in 0..40 {
        let points: Vec<Vec<f64>> = (0..d).map(|_| random_unit_vector(basis.n, &mut rng)).collect();
        let mut v = Matrix::zeros(d, d);
        let mut w = Matrix::zeros(d, d);
        for (col, u) in points.iter().enumerate() {
            let lu = lift_vector(u, basis)?;
            let au = a.mul_vec(u);
            let lau = lift_vector(&au, basis)?;
            for row in 0..d {
                v.set(row, col, lu[row]);
                w.set(row, col, lau[row]);
            }
        }
        // G·V = W  ⇔  Vᵀ·Gᵀ = Wᵀ.
        let g = match v.transpose().solve_multi(&w.transpose()) {
            Ok(gt) => gt.transpose(),
            Err(NumericsError::Singular(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        // Accept only if the defining identity holds on fresh points.
        let mut ok = true;
        for _ in 0..4 {
            let u = random_unit_vector(basis.n, &mut rng);
            let left = g.mul_vec(&lift_vector(&u, basis)?);
            let right = lift_vector(&a.mul_vec(&u), basis)?;
            let err: f64 = left
                .iter()
                .zip(&right)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let scale = norm(&right).max(1.0);
            if err > 1e-11 * scale {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(g);
        }
    }
    Err(SosError::BadInterpolation)
}

/// Lyapunov feasibility step in lifted coordinates at a fixed gain:
/// bisects the rate over `[0, gamma_init]` against
/// `(z^[d])ᵀP z^[d] ≤ γ^pow (x^[d])ᵀP x^[d]`, `P ⪰ I`, with `pow`
/// selected by the exponent convention. Returns the lifted witness and
/// the certified rate.
pub fn lifted_p_step(
    k: &Feedback,
    data: &SampleSet,
    b: &Matrix,
    basis: &LiftBasis,
    gamma_init: f64,
    rate: RateExponent,
    cfg: &SolverConfig,
) -> Result<(SymMatrix, f64), SosError> {
    if data.is_empty() {
        return Err(SosError::DimensionMismatch("sample set is empty".into()));
    }
    if data.dim() != basis.n {
        return Err(SosError::DimensionMismatch(format!(
            "samples live in dimension {}, basis expects {}",
            data.dim(),
            basis.n
        )));
    }
    if b.rows() != basis.n || k.matrix().rows() != b.cols() || k.matrix().cols() != basis.n {
        return Err(SosError::DimensionMismatch("gain and input dimensions disagree".into()));
    }
    let d = basis.dim();
    if d > MAX_LIFTED_DIM {
        return Err(SosError::EngineSizeCap { dim: d, cap: MAX_LIFTED_DIM });
    }

    let bk = b.mul(k.matrix());
    let pairs = data.pairs();
    let lifted: Vec<(Vec<f64>, Vec<f64>)> = crate::exec::map_collect(pairs, |_, pair| {
        let bkx = bk.mul_vec(pair.x());
        let z: Vec<f64> = pair.y().iter().zip(&bkx).map(|(y, c)| y + c).collect();
        let lx = lift_vector(pair.x(), basis).expect("dimension already checked");
        let lz = lift_vector(&z, basis).expect("dimension already checked");
        (lx, lz)
    });
    let (xs, zs): (Vec<Vec<f64>>, Vec<Vec<f64>>) = lifted.into_iter().unzip();

    let pow = match rate {
        RateExponent::TwoD => 2 * basis.degree as i32,
        RateExponent::Two => 2,
    };
    Ok(rate_bisection(&xs, &zs, d, pow, gamma_init, cfg)?)
}
