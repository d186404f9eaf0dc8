//! Data-driven stabilization of black-box switched linear systems.
//!
//! Given finitely many one-step trajectories `(x, A_σ x)` of a switched
//! linear system whose dynamics matrices and switching signal are unknown,
//! this crate synthesizes a static state feedback `K` together with a
//! quadratic certificate `P`, and attaches a probabilistic upper bound on
//! the closed-loop joint spectral radius at a stated confidence level.
//!
//! The pipeline:
//!
//! 1. [`system`] — ground-truth container, sampling oracle, simulator and
//!    input-state data normalization;
//! 2. [`synthesis`] — the sampled minimax feedback step, the Lyapunov
//!    feasibility step, and the alternating minimization between them;
//! 3. [`geometry`] — spherical-cap measures and the sample-complexity
//!    confidence bound;
//! 4. [`certification`] — the certified spectral-radius bound plus
//!    white-box validators (dense product bracket, exact quadratic bound);
//! 5. [`soslift`] — degree-`d` monomial lifting for tighter analysis rates;
//! 6. [`numerics`] — small dense symmetric linear algebra and the ellipsoid
//!    feasibility/minimization kernels everything else runs on.
//!
//! Per-sample and per-product inner loops run data-parallel on rayon when
//! the `parallel` feature (default) is enabled; disabling it falls back to
//! identical sequential code paths. Results are schedule-independent either
//! way. `STAB_MAX_THREADS` caps the worker pool.

pub mod certification;
pub mod exec;
pub mod geometry;
pub mod numerics;
pub mod soslift;
pub mod synthesis;
pub mod system;

pub use certification::{certify, jsr_bracket, theorem_bound, whitebox_cqlf_bound, Bound, Certificate};
pub use geometry::{
    cap_measure, cap_measure_inv, confidence_violation, epsilon_for_confidence, packing_bound,
    ConfidenceQuery, ConfidenceTarget,
};
pub use numerics::{Matrix, SymMatrix};
pub use soslift::{lift_matrix, lift_vector, lifted_p_step, LiftBasis, RateExponent};
pub use synthesis::{
    alternate, k_step, p_step, sampled_residual, Feedback, SolverConfig, SynthesisResult,
};
pub use system::{
    normalize_dataset, sample_dataset, simulate_closed_loop, SamplePair, SampleSet, SwitchedSystem,
};
