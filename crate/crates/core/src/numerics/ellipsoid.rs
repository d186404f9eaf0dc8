//! Ellipsoid-method kernels: affine matrix-inequality feasibility with
//! deep cuts, and convex minimization from subgradients.
//!
//! The feasibility engine searches a ball of given radius for a point at
//! which every constraint `F₀ + Σ vᵢ Fᵢ ⪰ 0` holds with a minimum
//! eigenvalue of at least `tol`. The separating oracle is the eigenvector
//! of the most negative eigenvalue of the most violated constraint. An
//! `Infeasible` answer is a search-radius/tolerance statement, not a
//! mathematical infeasibility certificate.

use super::{dot, norm, sym_eigs_full, Matrix, NumericsError, SymMatrix};

/// Default search-ball radius for the decision vector.
pub const DEFAULT_RADIUS_BOUND: f64 = 1e6;
/// Default strict-feasibility margin.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-7;

/// One constraint `constant + Σ vᵢ·coefficientᵢ ⪰ 0` over the decision
/// vector `v`. All matrices share one order.
#[derive(Debug, Clone)]
pub struct AffineMatrixConstraint {
    constant: SymMatrix,
    coeffs: Vec<SymMatrix>,
}

impl AffineMatrixConstraint {
    pub fn new(constant: SymMatrix, coeffs: Vec<SymMatrix>) -> Result<Self, NumericsError> {
        let order = constant.order();
        if coeffs.iter().any(|c| c.order() != order) {
            return Err(NumericsError::BadDimension(
                "constraint matrices must share one order".into(),
            ));
        }
        Ok(Self { constant, coeffs })
    }

    /// Scalar (order-1) constraint `c₀ + Σ vᵢ cᵢ ≥ 0`.
    pub fn scalar(constant: f64, coeffs: Vec<f64>) -> Self {
        Self {
            constant: SymMatrix::from_packed(1, vec![constant]),
            coeffs: coeffs
                .into_iter()
                .map(|c| SymMatrix::from_packed(1, vec![c]))
                .collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.constant.order()
    }

    pub fn variables(&self) -> usize {
        self.coeffs.len()
    }

    /// `constant + Σ vᵢ·coefficientᵢ` at the given point.
    pub fn eval(&self, v: &[f64]) -> SymMatrix {
        let mut m = self.constant.clone();
        for (vi, ci) in v.iter().zip(&self.coeffs) {
            if *vi != 0.0 {
                m = m.add(&ci.scale(*vi));
            }
        }
        m
    }

    /// Minimum eigenvalue of the constraint at `v`; eigensolver failures
    /// map to `-inf` so the caller re-examines the constraint.
    fn margin(&self, v: &[f64]) -> f64 {
        if self.order() == 1 {
            let mut acc = self.constant.packed()[0];
            for (vi, ci) in v.iter().zip(&self.coeffs) {
                acc += vi * ci.packed()[0];
            }
            acc
        } else {
            match sym_eigs_full(&self.eval(v)) {
                Ok((vals, _)) => vals[0],
                Err(_) => f64::NEG_INFINITY,
            }
        }
    }

    /// Margin and the certifying direction `u` with `uᵀM(v)u = margin`.
    fn margin_with_direction(&self, v: &[f64]) -> Result<(f64, Vec<f64>), NumericsError> {
        if self.order() == 1 {
            return Ok((self.margin(v), vec![1.0]));
        }
        let (vals, vecs) = sym_eigs_full(&self.eval(v))?;
        let u = (0..self.order()).map(|i| vecs.get(i, 0)).collect();
        Ok((vals[0], u))
    }

    /// Affine form of `uᵀM(w)u` in `w`: returns `(g, b)` with
    /// `uᵀM(w)u = g·w + b`.
    fn directional_form(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let g = self.coeffs.iter().map(|c| c.quad_form(u)).collect();
        (g, self.constant.quad_form(u))
    }
}

/// Answer of the feasibility search.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// A point at which every constraint has margin at least `tol`.
    Feasible(Vec<f64>),
    /// No such point was found inside the ball; carries the best margin
    /// seen at any visited in-ball center.
    Infeasible { best_margin: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            Feasibility::Feasible(v) => Some(v),
            Feasibility::Infeasible { .. } => None,
        }
    }
}

/// Ellipsoid `{c + Lu : ‖u‖ ≤ 1}` kept in the factored form `B = LLᵀ`,
/// so every directional variance `aᵀBa = ‖Lᵀa‖²` is a sum of squares and
/// cannot lose positivity to cancellation. Directions that no cut ever
/// touches inflate geometrically under the minimal-volume update, so
/// [`EllipsoidState::control_width`] reins in any axis that outgrows the
/// search ball.
struct EllipsoidState {
    center: Vec<f64>,
    factor: Matrix, // L with B = LLᵀ
    dim: usize,
}

impl EllipsoidState {
    fn ball(dim: usize, radius: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            factor: Matrix::identity(dim).scale(radius),
            dim,
        }
    }

    /// `‖Lᵀa‖²` and its root, the variance of the ellipsoid along `a`.
    fn variance_along(&self, a: &[f64]) -> (Vec<f64>, f64) {
        let d = self.dim;
        let mut lta = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.factor.get(j, i) * a[j];
            }
            lta[i] = acc;
        }
        let aba = dot(&lta, &lta);
        (lta, aba)
    }

    /// Extent along coordinate `i`: `√(B_ii)` = norm of row `i` of `L`.
    fn coordinate_extent(&self, i: usize) -> f64 {
        norm(self.factor.row(i))
    }

    fn max_semi_axis(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.coordinate_extent(i))
            .fold(0.0f64, f64::max)
            * (self.dim as f64).sqrt()
    }

    /// Cut keeping `{w : a·w ≤ beta}`. Handles deep (center outside) and
    /// shallow (center inside) cuts alike; cuts too shallow to shrink the
    /// ellipsoid are skipped. Returns false when the kept halfspace
    /// misses the whole ellipsoid or the cut direction has collapsed.
    fn cut(&mut self, a: &[f64], beta: f64) -> bool {
        let d = self.dim;
        let (lta, aba) = self.variance_along(a);
        if !(aba > 0.0) {
            return false;
        }
        let denom = aba.sqrt();
        let alpha = (dot(a, &self.center) - beta) / denom;
        if alpha >= 1.0 {
            return false;
        }
        let df = d as f64;
        if alpha <= -1.0 / df {
            // The halfspace covers so much of the ellipsoid that no
            // smaller ellipsoid exists; nothing to do.
            return true;
        }
        if d == 1 {
            // Exact interval arithmetic for a single variable.
            let r = self.factor.get(0, 0).abs();
            let (lo, hi) = (self.center[0] - r, self.center[0] + r);
            let (lo, hi) = if a[0] > 0.0 {
                (lo, hi.min(beta / a[0]))
            } else {
                (lo.max(beta / a[0]), hi)
            };
            if lo > hi {
                return false;
            }
            self.center[0] = 0.5 * (lo + hi);
            self.factor.set(0, 0, 0.5 * (hi - lo));
            return true;
        }
        let tau = (1.0 + df * alpha) / (df + 1.0);
        let sigma = 2.0 * (1.0 + df * alpha) / ((df + 1.0) * (1.0 + alpha));
        let delta = (df * df / (df * df - 1.0)) * (1.0 - alpha * alpha);

        // b = Ba = L·(Lᵀa); center moves against the cut by τ·b/‖Lᵀa‖.
        let mut b = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.factor.get(i, j) * lta[j];
            }
            b[i] = acc;
        }
        for i in 0..d {
            self.center[i] -= tau * b[i] / denom;
        }
        // Factor update L ← √δ·L·(I − c·vvᵀ) with v = Lᵀa/‖Lᵀa‖ and
        // c = 1 − √(1−σ) reproduces B ← δ(B − σ·bbᵀ/aᵀBa) exactly.
        let c_coef = 1.0 - (1.0 - sigma).max(0.0).sqrt();
        let root_delta = delta.max(0.0).sqrt();
        for i in 0..d {
            let lv = b[i] / denom;
            for j in 0..d {
                let updated = (self.factor.get(i, j) - c_coef * lv * lta[j] / denom) * root_delta;
                self.factor.set(i, j, updated);
            }
        }
        true
    }

    /// Applies coordinate cuts wherever the ellipsoid reaches far beyond
    /// the search ball, bounding axis growth without discarding any point
    /// of the ball itself.
    fn control_width(&mut self, radius: f64) {
        let cap = 2.0 * radius;
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                if sign * self.center[i] + self.coordinate_extent(i) > cap {
                    let mut a = vec![0.0; self.dim];
                    a[i] = sign;
                    self.cut(&a, cap);
                }
            }
        }
    }
}

fn feasibility_iteration_cap(dim: usize, radius: f64, collapse: f64) -> usize {
    let d = dim as f64;
    let span = (radius / collapse).max(10.0).ln();
    (4.0 * d * (d + 1.0) * span).ceil() as usize + 64
}

/// Searches for `v` in the ball `‖v‖ ≤ radius_bound` such that every
/// constraint holds with margin at least `tol`.
pub fn conic_feasible(
    constraints: &[AffineMatrixConstraint],
    dim: usize,
    radius_bound: f64,
    tol: f64,
) -> Result<Feasibility, NumericsError> {
    for (k, c) in constraints.iter().enumerate() {
        if c.variables() != dim {
            return Err(NumericsError::BadDimension(format!(
                "constraint {k} has {} coefficient matrices, expected {dim}",
                c.variables()
            )));
        }
    }
    if constraints.is_empty() {
        return Ok(Feasibility::Feasible(vec![0.0; dim]));
    }
    if dim == 0 {
        let worst = constraints
            .iter()
            .map(|c| c.margin(&[]))
            .fold(f64::INFINITY, f64::min);
        return Ok(if worst >= tol {
            Feasibility::Feasible(Vec::new())
        } else {
            Feasibility::Infeasible { best_margin: worst }
        });
    }

    let collapse = (radius_bound * 1e-12).max(1e-14);
    let max_iter = feasibility_iteration_cap(dim, radius_bound, collapse);
    let mut ell = EllipsoidState::ball(dim, radius_bound);
    let mut best_margin = f64::NEG_INFINITY;

    for _ in 0..max_iter {
        let center_norm = norm(&ell.center);
        if center_norm > radius_bound {
            // Pull the search back inside the ball.
            let a: Vec<f64> = ell.center.iter().map(|x| x / center_norm).collect();
            if !ell.cut(&a, radius_bound) {
                break;
            }
            continue;
        }

        let (worst_idx, worst) = crate::exec::min_scored(constraints, |_, c| c.margin(&ell.center))
            .expect("nonempty constraint list");
        if worst > best_margin {
            best_margin = worst;
        }
        if worst >= tol {
            return Ok(Feasibility::Feasible(ell.center.clone()));
        }

        // Re-derive the winner's margin with its direction; this also
        // surfaces eigensolver failures hidden by the -inf encoding.
        let (margin, u) = constraints[worst_idx].margin_with_direction(&ell.center)?;
        let (g, b) = constraints[worst_idx].directional_form(&u);
        // Feasible points satisfy g·w + b ≥ tol; cut away the rest.
        let a: Vec<f64> = g.iter().map(|x| -x).collect();
        let beta = b - tol;
        debug_assert!(margin < tol);
        if !ell.cut(&a, beta) {
            break;
        }
        ell.control_width(radius_bound);
        if ell.max_semi_axis() < collapse {
            break;
        }
    }
    Ok(Feasibility::Infeasible { best_margin })
}

/// Result of [`minimize_subgradient`].
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Certified optimality gap at exit (objective units).
    pub gap: f64,
    pub iterations: usize,
}

/// One oracle answer for [`minimize_constrained`].
pub enum ConstrainedEval {
    /// The point is feasible: objective value and a subgradient.
    Objective(f64, Vec<f64>),
    /// The point violates a constraint `h(w) ≤ 0` by `violation > 0`;
    /// carries a subgradient of `h` there.
    Violated { violation: f64, subgradient: Vec<f64> },
}

/// Minimizes a convex function over the intersection of the ball
/// `‖v‖ ≤ radius` with a convex feasible set probed through the oracle.
/// The start point (the origin) must be feasible; returns the best
/// feasible point visited.
pub fn minimize_constrained(
    dim: usize,
    radius: f64,
    mut oracle: impl FnMut(&[f64]) -> ConstrainedEval,
    tol: f64,
    max_iter: usize,
) -> MinimizeOutcome {
    let mut ell = EllipsoidState::ball(dim, radius);
    let mut best_point = vec![0.0; dim];
    let mut best_value = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;

    loop {
        iterations += 1;
        let cn = norm(&ell.center);
        if cn > radius {
            let a: Vec<f64> = ell.center.iter().map(|x| x / cn).collect();
            if !ell.cut(&a, radius) {
                break;
            }
            continue;
        }
        match oracle(&ell.center) {
            ConstrainedEval::Objective(value, g) => {
                if value < best_value {
                    best_value = value;
                    best_point = ell.center.clone();
                }
                let gnorm = norm(&g);
                if gnorm == 0.0 {
                    return MinimizeOutcome {
                        point: best_point,
                        value: best_value,
                        gap: 0.0,
                        iterations,
                    };
                }
                let (_, gbg) = ell.variance_along(&g);
                lower = lower.max(value - gbg.sqrt());
                if best_value - lower <= tol || iterations >= max_iter {
                    break;
                }
                let beta = dot(&g, &ell.center);
                if !ell.cut(&g, beta) {
                    break;
                }
            }
            ConstrainedEval::Violated { violation, subgradient: g } => {
                if iterations >= max_iter {
                    break;
                }
                // Feasible points satisfy h(c) + gᵀ(w − c) ≤ 0.
                let beta = dot(&g, &ell.center) - violation;
                if !ell.cut(&g, beta) {
                    break;
                }
            }
        }
        ell.control_width(radius);
    }
    MinimizeOutcome {
        point: best_point,
        value: best_value,
        gap: best_value - lower,
        iterations,
    }
}

/// Minimizes a convex function over the ball `‖v‖ ≤ radius` from value
/// plus subgradient evaluations, until the certified gap drops below
/// `tol` or the iteration cap is hit.
pub fn minimize_subgradient(
    dim: usize,
    radius: f64,
    mut oracle: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    tol: f64,
    max_iter: usize,
) -> MinimizeOutcome {
    let mut ell = EllipsoidState::ball(dim, radius);
    let start = vec![0.0; dim];
    let (f0, mut g) = oracle(&start);
    let mut current = f0;
    let mut best_point = start;
    let mut best_value = f0;
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;

    loop {
        iterations += 1;
        let gnorm = norm(&g);
        if gnorm == 0.0 {
            // A zero subgradient certifies a global minimizer.
            return MinimizeOutcome { point: best_point, value: best_value, gap: 0.0, iterations };
        }
        // The value at the current center exceeds the optimum by at most
        // the ellipsoid's spread along the subgradient.
        let (_, gbg) = ell.variance_along(&g);
        lower = lower.max(current - gbg.sqrt());
        if best_value - lower <= tol || iterations >= max_iter {
            return MinimizeOutcome {
                point: best_point,
                value: best_value,
                gap: best_value - lower,
                iterations,
            };
        }
        // Central objective cut through the current center.
        let beta = dot(&g, &ell.center);
        if !ell.cut(&g, beta) {
            return MinimizeOutcome {
                point: best_point,
                value: best_value,
                gap: best_value - lower,
                iterations,
            };
        }
        ell.control_width(radius);

        // Keep the center inside the ball before evaluating.
        loop {
            let cn = norm(&ell.center);
            if cn <= radius {
                break;
            }
            let a: Vec<f64> = ell.center.iter().map(|x| x / cn).collect();
            if !ell.cut(&a, radius) {
                return MinimizeOutcome {
                    point: best_point,
                    value: best_value,
                    gap: best_value - lower,
                    iterations,
                };
            }
        }

        let (fv, gv) = oracle(&ell.center);
        current = fv;
        if fv < best_value {
            best_value = fv;
            best_point = ell.center.clone();
        }
        g = gv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lmi_is_feasible() {
        // v·I − I ⪰ 0 over one variable: any v ≥ 1 + tol works.
        let c = AffineMatrixConstraint::new(
            SymMatrix::identity(2).scale(-1.0),
            vec![SymMatrix::identity(2)],
        )
        .unwrap();
        let got = conic_feasible(&[c], 1, DEFAULT_RADIUS_BOUND, DEFAULT_FEASIBILITY_TOL).unwrap();
        match got {
            Feasibility::Feasible(v) => assert!(v[0] >= 1.0 + DEFAULT_FEASIBILITY_TOL - 1e-12),
            other => panic!("expected feasibility, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_pair_is_infeasible() {
        // v ≥ 1 and −v ≥ 0 cannot hold together.
        let c1 = AffineMatrixConstraint::scalar(-1.0, vec![1.0]);
        let c2 = AffineMatrixConstraint::scalar(0.0, vec![-1.0]);
        let got =
            conic_feasible(&[c1, c2], 1, DEFAULT_RADIUS_BOUND, DEFAULT_FEASIBILITY_TOL).unwrap();
        assert!(!got.is_feasible());
    }

    #[test]
    fn contraction_lmi_for_a_scaled_identity() {
        // Feasibility of AᵀPA ⪯ γ²P with P ⪰ I for A = 0.5·I, γ = 0.6:
        // P = I works since 0.25 ≤ 0.36. Decision vector is vech(P − I).
        let n = 2;
        let a = Matrix::identity(n).scale(0.5);
        let gamma: f64 = 0.6;
        let dim = SymMatrix::vech_len(n);
        let mut contraction_coeffs = Vec::with_capacity(dim);
        let mut floor_coeffs = Vec::with_capacity(dim);
        for i in 0..n {
            for j in 0..=i {
                let mut basis = SymMatrix::zeros(n);
                basis.set(i, j, 1.0);
                if i != j {
                    basis.set(j, i, 1.0);
                }
                let bd = basis.to_dense();
                let ata = a.transpose().mul(&bd.mul(&a));
                let lhs = SymMatrix::from_dense_symmetrized(
                    &bd.scale(gamma * gamma).add(&ata.scale(-1.0)),
                );
                contraction_coeffs.push(lhs);
                floor_coeffs.push(basis);
            }
        }
        let ident = Matrix::identity(n);
        let const_contraction = SymMatrix::from_dense_symmetrized(
            &ident
                .scale(gamma * gamma)
                .add(&a.transpose().mul(&a).scale(-1.0)),
        );
        let contraction =
            AffineMatrixConstraint::new(const_contraction, contraction_coeffs).unwrap();
        let floor = AffineMatrixConstraint::new(SymMatrix::zeros(n), floor_coeffs).unwrap();
        let got = conic_feasible(
            &[contraction, floor],
            dim,
            DEFAULT_RADIUS_BOUND,
            DEFAULT_FEASIBILITY_TOL,
        )
        .unwrap();
        assert!(got.is_feasible(), "P = I certifies this contraction");
    }

    #[test]
    fn coefficient_count_mismatch_is_rejected() {
        let c = AffineMatrixConstraint::scalar(0.0, vec![1.0, 2.0]);
        assert!(matches!(
            conic_feasible(&[c], 3, 10.0, 1e-7),
            Err(NumericsError::BadDimension(_))
        ));
    }

    #[test]
    fn feasible_points_respect_all_margins() {
        // Random-ish batch of scalar constraints with a known interior
        // point; whatever the engine returns must hold every margin.
        let constraints = vec![
            AffineMatrixConstraint::scalar(3.0, vec![1.0, -1.0]),
            AffineMatrixConstraint::scalar(1.0, vec![0.5, 1.0]),
            AffineMatrixConstraint::scalar(4.0, vec![-1.0, 0.25]),
        ];
        let got = conic_feasible(&constraints, 2, 100.0, 1e-6).unwrap();
        let v = got.point().expect("interior exists");
        for c in &constraints {
            assert!(c.margin(v) >= -1e-9);
        }
    }

    #[test]
    fn minimizer_finds_a_quadratic_optimum() {
        let target = [1.5, -2.0, 0.25];
        let out = minimize_subgradient(
            3,
            100.0,
            |v| {
                let f: f64 = v.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = v.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
                (f, g)
            },
            1e-10,
            20_000,
        );
        assert!(out.value < 1e-8, "value {}", out.value);
        for (a, b) in out.point.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn minimizer_handles_nonsmooth_objectives() {
        // max(|v₀ − 1|, |v₁ + 2|) has its minimum 0 at (1, −2).
        let out = minimize_subgradient(
            2,
            50.0,
            |v| {
                let t0 = (v[0] - 1.0).abs();
                let t1 = (v[1] + 2.0).abs();
                if t0 >= t1 {
                    (t0, vec![(v[0] - 1.0).signum(), 0.0])
                } else {
                    (t1, vec![0.0, (v[1] + 2.0).signum()])
                }
            },
            1e-9,
            20_000,
        );
        assert!(out.value < 1e-6);
    }
}
