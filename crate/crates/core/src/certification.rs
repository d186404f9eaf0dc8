//! Probabilistic spectral-radius certificates and white-box validators.
//!
//! From a feasible sampled triple `(γ, P, K)` and a covering parameter
//! `ε`, the certified bound on the closed-loop joint spectral radius is
//! `γ / (1 − κ(P)(1 − cos δ⁻¹(ε)))`, valid with probability at least
//! `1 − B(ε; N)`; when the denominator is nonpositive the bound is
//! infinite and the certificate vacuous. The white-box side — an exact
//! quadratic contraction bound and a dense product bracket — exists to
//! audit certificates against the ground truth in tests and sweeps.

use crate::exec;
use crate::geometry::{
    cap_measure_inv, confidence_violation, ConfidenceQuery, GeometryError,
};
use crate::numerics::{
    condition_number, conic_feasible, growth_rate, AffineMatrixConstraint, Feasibility, Matrix,
    NumericsError, SymMatrix, DEFAULT_FEASIBILITY_TOL, DEFAULT_RADIUS_BOUND,
};
use crate::synthesis::SynthesisResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Product count cap for the bracket enumeration.
pub const PRODUCT_CAP: f64 = 1e6;

#[derive(Debug, Error)]
pub enum CertError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("enumerating {products:.3e} products exceeds the cap {cap:.3e}")]
    BudgetExceeded { products: f64, cap: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// A spectral-radius bound that may degenerate to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundRepr", into = "BoundRepr")]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Infinite => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundRepr {
    Num(f64),
    Word(String),
}

impl From<Bound> for BoundRepr {
    fn from(b: Bound) -> Self {
        match b {
            Bound::Finite(v) => BoundRepr::Num(v),
            Bound::Infinite => BoundRepr::Word("inf".into()),
        }
    }
}

impl TryFrom<BoundRepr> for Bound {
    type Error = String;
    fn try_from(r: BoundRepr) -> Result<Self, String> {
        match r {
            BoundRepr::Num(v) => Ok(Bound::Finite(v)),
            BoundRepr::Word(w) if w == "inf" => Ok(Bound::Infinite),
            BoundRepr::Word(w) => Err(format!("unexpected bound token {w:?}")),
        }
    }
}

/// The full certificate: sampled rate, conditioning, covering parameter
/// and its angle, the confidence level, and the certified bound. The
/// bound and the confidence always travel together — neither is
/// meaningful alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub gamma_sampled: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub confidence: f64,
    pub bound: Bound,
    #[serde(rename = "N")]
    pub samples: usize,
}

impl Certificate {
    /// A certificate is vacuous when it cannot witness stability: the
    /// bound is infinite or at least one, or the confidence nonpositive.
    pub fn is_vacuous(&self) -> bool {
        self.confidence <= 0.0
            || match self.bound {
                Bound::Infinite => true,
                Bound::Finite(v) => v >= 1.0,
            }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// The certified rate inflation `γ / (1 − κ(P)(1 − cos δ⁻¹(ε)))`, with
/// the convention that a nonpositive denominator yields an infinite
/// bound.
pub fn theorem_bound(gamma: f64, p: &SymMatrix, eps: f64) -> Result<Bound, CertError> {
    let kappa = condition_number(p)?;
    let theta = cap_measure_inv(p.order(), eps)?;
    Ok(assemble_bound(gamma, kappa, theta))
}

fn assemble_bound(gamma: f64, kappa: f64, theta: f64) -> Bound {
    let denom = 1.0 - kappa * (1.0 - theta.cos());
    if denom <= 0.0 {
        Bound::Infinite
    } else {
        Bound::Finite(gamma / denom)
    }
}

/// Assembles the certificate for a synthesis result: resolves ε from the
/// query, evaluates the confidence bound, and applies the rate
/// inflation. Pure in its inputs.
pub fn certify(result: &SynthesisResult, query: &ConfidenceQuery) -> Result<Certificate, CertError> {
    if query.dimension != result.p.order() {
        return Err(CertError::Dimension(format!(
            "query dimension {} disagrees with the shape order {}",
            query.dimension,
            result.p.order()
        )));
    }
    let epsilon = query.resolve_epsilon()?;
    let theta = cap_measure_inv(query.dimension, epsilon)?;
    let kappa = condition_number(&result.p)?;
    let violation = confidence_violation(query.dimension, query.modes, query.samples, epsilon)?;
    Ok(Certificate {
        gamma_sampled: result.gamma,
        kappa,
        epsilon,
        theta,
        confidence: 1.0 - violation,
        bound: assemble_bound(result.gamma, kappa, theta),
        samples: query.samples,
    })
}

/// Exact common-quadratic contraction bound for a fixed matrix set: the
/// smallest `γ` (within `tol`) admitting `P ⪰ I` with `AᵀPA ⪯ γ²P` for
/// every listed matrix, found by bisection over the feasibility engine.
/// Always solvable: `P = I` certifies any `γ` at or above the largest
/// spectral norm.
pub fn whitebox_cqlf_bound(
    matrices: &[Matrix],
    tol: f64,
) -> Result<(f64, SymMatrix), CertError> {
    let n = check_square_family(matrices)?;
    let dim = SymMatrix::vech_len(n);

    let mut basis = Vec::with_capacity(dim);
    for i in 0..n {
        for j in 0..=i {
            let mut e = SymMatrix::zeros(n);
            e.set(i, j, 1.0);
            basis.push(e);
        }
    }

    // Constraint family at a trial rate, over v = vech(P − I):
    // γ²(I + V) − Aᵀ(I + V)A ⪰ 0 for each A, plus V ⪰ 0.
    let feasible = |gamma: f64| -> Result<Option<SymMatrix>, CertError> {
        let g2 = gamma * gamma;
        let mut constraints = Vec::with_capacity(matrices.len() + 1);
        for a in matrices {
            let ata = a.transpose().mul(a);
            let constant = SymMatrix::from_dense_symmetrized(
                &Matrix::identity(n).scale(g2).add(&ata.scale(-1.0)),
            );
            let coeffs = basis
                .iter()
                .map(|e| {
                    let ed = e.to_dense();
                    let aea = a.transpose().mul(&ed.mul(a));
                    SymMatrix::from_dense_symmetrized(&ed.scale(g2).add(&aea.scale(-1.0)))
                })
                .collect();
            constraints.push(AffineMatrixConstraint::new(constant, coeffs)?);
        }
        constraints.push(AffineMatrixConstraint::new(SymMatrix::zeros(n), basis.clone())?);
        match conic_feasible(&constraints, dim, DEFAULT_RADIUS_BOUND, DEFAULT_FEASIBILITY_TOL)? {
            Feasibility::Feasible(v) => Ok(Some(
                SymMatrix::from_packed(n, v).add(&SymMatrix::identity(n)),
            )),
            Feasibility::Infeasible { .. } => Ok(None),
        }
    };

    let norm_cap = matrices.iter().map(Matrix::spectral_norm).fold(0.0f64, f64::max);
    let mut hi = norm_cap * (1.0 + 1e-6) + tol;
    let mut witness = loop {
        match feasible(hi)? {
            Some(p) => break p,
            None => {
                // The identity certifies any rate above the largest
                // spectral norm, so widen until the engine sees it.
                hi = hi * 2.0 + 1.0;
                if hi > 1e12 {
                    return Err(CertError::Dimension(
                        "feasibility engine rejected a certifiable rate".into(),
                    ));
                }
            }
        }
    };
    let mut lo = 0.0f64;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(p) => {
                witness = p;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    Ok((hi, witness))
}

/// Bracket on the joint spectral radius of a matrix set by exhaustive
/// product enumeration up to the given depth (capped at [`PRODUCT_CAP`]
/// products). Upper bound: the best per-length worst-case spectral norm
/// `max‖Π_k‖^(1/k)`; lower bound: per-product spectral radius evidence
/// from traces, refined by growth-rate runs on the per-level champions.
pub fn jsr_bracket(matrices: &[Matrix], depth: usize) -> Result<(f64, f64), CertError> {
    let n = check_square_family(matrices)?;
    if depth < 1 {
        return Err(CertError::Dimension("depth must be at least 1".into()));
    }
    let products = (matrices.len() as f64).powi(depth as i32);
    if products > PRODUCT_CAP {
        return Err(CertError::BudgetExceeded { products, cap: PRODUCT_CAP });
    }

    #[derive(Clone)]
    struct LevelStats {
        max_norm: f64,
        norm_champion: Option<Matrix>,
        best_trace: f64,
        trace_champion: Option<Matrix>,
    }
    impl LevelStats {
        fn empty() -> Self {
            Self { max_norm: 0.0, norm_champion: None, best_trace: 0.0, trace_champion: None }
        }
        fn absorb(&mut self, other: &LevelStats) {
            if other.max_norm > self.max_norm || self.norm_champion.is_none() {
                self.max_norm = other.max_norm;
                self.norm_champion = other.norm_champion.clone();
            }
            if other.best_trace > self.best_trace || self.trace_champion.is_none() {
                self.best_trace = other.best_trace;
                self.trace_champion = other.trace_champion.clone();
            }
        }
    }

    fn dfs(matrices: &[Matrix], node: &Matrix, level: usize, depth: usize, stats: &mut [LevelStats]) {
        let s = &mut stats[level - 1];
        let nrm = node.spectral_norm();
        if nrm > s.max_norm || s.norm_champion.is_none() {
            s.max_norm = nrm;
            s.norm_champion = Some(node.clone());
        }
        let tr = node.trace().abs() / node.rows() as f64;
        if tr > s.best_trace || s.trace_champion.is_none() {
            s.best_trace = tr;
            s.trace_champion = Some(node.clone());
        }
        if level < depth {
            for a in matrices {
                let child = a.mul(node);
                dfs(matrices, &child, level + 1, depth, stats);
            }
        }
    }

    // Parallel over first-symbol subtrees, merged deterministically.
    let branch_stats: Vec<Vec<LevelStats>> = exec::map_collect(matrices, |_, first| {
        let mut stats = vec![LevelStats::empty(); depth];
        dfs(matrices, first, 1, depth, &mut stats);
        stats
    });
    let mut stats = vec![LevelStats::empty(); depth];
    for branch in &branch_stats {
        for (merged, lvl) in stats.iter_mut().zip(branch) {
            merged.absorb(lvl);
        }
    }

    let mut upper = f64::INFINITY;
    let mut lower = 0.0f64;
    for (idx, lvl) in stats.iter().enumerate() {
        let k = (idx + 1) as f64;
        upper = upper.min(lvl.max_norm.powf(1.0 / k));
        if lvl.best_trace > 0.0 {
            lower = lower.max(lvl.best_trace.powf(1.0 / k));
        }
    }
    // Growth-rate refinement on the per-level champions: the spectral
    // radius of any length-k product, to the power 1/k, lower-bounds the
    // joint rate.
    for (idx, lvl) in stats.iter().enumerate() {
        let k = (idx + 1) as f64;
        for champ in [&lvl.norm_champion, &lvl.trace_champion].into_iter().flatten() {
            if champ.frobenius_norm() == 0.0 {
                continue;
            }
            let (rho_lo, _) = growth_rate(champ, 20)?;
            lower = lower.max(rho_lo.powf(1.0 / k));
        }
    }
    let _ = n;
    Ok((lower.min(upper), upper))
}

fn check_square_family(matrices: &[Matrix]) -> Result<usize, CertError> {
    let first = matrices
        .first()
        .ok_or_else(|| CertError::Dimension("matrix set is empty".into()))?;
    if !first.is_square() {
        return Err(CertError::Dimension("matrices must be square".into()));
    }
    let n = first.rows();
    if matrices.iter().any(|m| m.rows() != n || m.cols() != n) {
        return Err(CertError::Dimension("matrices must share one order".into()));
    }
    Ok(n)
}
