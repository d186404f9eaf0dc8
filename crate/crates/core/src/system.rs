//! Ground-truth switched system, sampling oracle, simulator, and
//! input-state data normalization.
//!
//! The [`SwitchedSystem`] plays the black box: solvers never see its mode
//! matrices, only one-step samples `(x, A_σ x)` with the switching label
//! discarded. All randomness flows through a seeded ChaCha8 generator
//! with fixed stream splitting — stream 0 draws initial states, stream 1
//! draws modes, stream 2 drives closed-loop switching — so any dataset or
//! trajectory is reproducible across platforms from its seed alone.

use crate::numerics::{norm, Matrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

const STATE_STREAM: u64 = 0;
const MODE_STREAM: u64 = 1;
const SWITCH_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("mode {mode} is out of range 1..={modes}")]
    BadMode { mode: usize, modes: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate state at row {row}: norm {norm:.3e} is below 1e-12")]
    DegenerateState { row: usize, norm: f64 },
    #[error("sample point is not on the unit sphere (norm {0})")]
    OffSphere(f64),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The black-box ground truth: `x(t+1) = A_σ(t) x(t) + B u(t)` with the
/// mode drawn from `M` matrices and a shared, known input matrix `B`.
#[derive(Debug, Clone)]
pub struct SwitchedSystem {
    n: usize,
    m: usize,
    modes: Vec<Matrix>,
    b: Matrix,
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    n: usize,
    m: usize,
    #[serde(rename = "M")]
    mode_count: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<Matrix>, b: Matrix) -> Result<Self, SystemError> {
        if modes.is_empty() {
            return Err(SystemError::DimensionMismatch("at least one mode is required".into()));
        }
        let n = modes[0].rows();
        for (k, a) in modes.iter().enumerate() {
            if a.rows() != n || a.cols() != n {
                return Err(SystemError::DimensionMismatch(format!(
                    "mode {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    a.rows(),
                    a.cols()
                )));
            }
        }
        if b.rows() != n {
            return Err(SystemError::DimensionMismatch(format!(
                "input matrix has {} rows, expected {n}",
                b.rows()
            )));
        }
        let m = b.cols();
        Ok(Self { n, m, modes, b })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    pub fn input_matrix(&self) -> &Matrix {
        &self.b
    }

    /// Closed-loop matrices `A_σ + BK` for a feedback gain `K`.
    pub fn closed_loop_modes(&self, k: &Matrix) -> Vec<Matrix> {
        let bk = self.b.mul(k);
        self.modes.iter().map(|a| a.add(&bk)).collect()
    }

    /// One step `A_mode·x + B·u`; `mode` is 1-based as in the switching
    /// signal convention σ ∈ {1, …, M}.
    pub fn step(&self, x: &[f64], mode: usize, u: &[f64]) -> Result<Vec<f64>, SystemError> {
        if mode < 1 || mode > self.modes.len() {
            return Err(SystemError::BadMode { mode, modes: self.modes.len() });
        }
        if x.len() != self.n {
            return Err(SystemError::DimensionMismatch(format!(
                "state has length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        if u.len() != self.m {
            return Err(SystemError::DimensionMismatch(format!(
                "input has length {}, expected {}",
                u.len(),
                self.m
            )));
        }
        let mut y = self.modes[mode - 1].mul_vec(x);
        let bu = self.b.mul_vec(u);
        for (yi, bi) in y.iter_mut().zip(&bu) {
            *yi += bi;
        }
        Ok(y)
    }

    pub fn to_json_string(&self) -> String {
        let file = SystemFile {
            n: self.n,
            m: self.m,
            mode_count: self.modes.len(),
            a: self.modes.iter().map(|a| a.as_slice().to_vec()).collect(),
            b: self.b.as_slice().to_vec(),
        };
        serde_json::to_string_pretty(&file).expect("system serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, SystemError> {
        let file: SystemFile = serde_json::from_str(s)?;
        if file.a.len() != file.mode_count {
            return Err(SystemError::Malformed(format!(
                "declared {} modes but found {} matrices",
                file.mode_count,
                file.a.len()
            )));
        }
        let modes = file
            .a
            .iter()
            .enumerate()
            .map(|(k, rm)| {
                if rm.len() != file.n * file.n {
                    Err(SystemError::Malformed(format!(
                        "mode {} has {} entries, expected {}",
                        k + 1,
                        rm.len(),
                        file.n * file.n
                    )))
                } else {
                    Ok(Matrix::from_row_major(file.n, file.n, rm.clone()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if file.b.len() != file.n * file.m {
            return Err(SystemError::Malformed(format!(
                "input matrix has {} entries, expected {}",
                file.b.len(),
                file.n * file.m
            )));
        }
        let b = Matrix::from_row_major(file.n, file.m, file.b.clone());
        Self::new(modes, b)
    }

    pub fn load(path: &Path) -> Result<Self, SystemError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SystemError> {
        Ok(std::fs::write(path, self.to_json_string())?)
    }
}

/// One solver-visible observation: a unit initial state and its successor
/// under some hidden mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SamplePair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, SystemError> {
        if x.len() != y.len() {
            return Err(SystemError::DimensionMismatch(
                "state and successor lengths differ".into(),
            ));
        }
        let nx = norm(&x);
        if (nx - 1.0).abs() > 1e-12 {
            return Err(SystemError::OffSphere(nx));
        }
        Ok(Self { x, y })
    }

    /// Builds a pair without the unit-sphere check. The solvers are
    /// scale-invariant by construction, so off-sphere pairs are legal
    /// inputs for homogeneity audits; sampled data stays on the sphere.
    pub fn new_unchecked(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "state and successor lengths differ");
        Self { x, y }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// A batch of observations plus the metadata needed to reproduce or audit
/// it. The hidden switching labels never appear here.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pairs: Vec<SamplePair>,
    dim: usize,
    seed: Option<u64>,
    declared_modes: Option<usize>,
}

impl SampleSet {
    pub fn from_pairs(pairs: Vec<SamplePair>) -> Result<Self, SystemError> {
        let dim = pairs
            .first()
            .map(|p| p.x.len())
            .ok_or_else(|| SystemError::DimensionMismatch("empty sample set".into()))?;
        if pairs.iter().any(|p| p.x.len() != dim) {
            return Err(SystemError::DimensionMismatch("pairs have mixed dimensions".into()));
        }
        Ok(Self { pairs, dim, seed: None, declared_modes: None })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[SamplePair] {
        &self.pairs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn declared_modes(&self) -> Option<usize> {
        self.declared_modes
    }

    pub fn with_declared_modes(mut self, m: usize) -> Self {
        self.declared_modes = Some(m);
        self
    }

    /// Writes the CSV interchange format: header `x_1,…,x_n,y_1,…,y_n`,
    /// one pair per row, 17 significant digits (round-trip exact).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SystemError> {
        let n = self.dim;
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x_{i}"))
            .chain((1..=n).map(|i| format!("y_{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for p in &self.pairs {
            let row: Vec<String> = p
                .x
                .iter()
                .chain(p.y.iter())
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SystemError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self, SystemError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| SystemError::Malformed("empty dataset file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols.len() % 2 != 0 || !cols[0].starts_with("x_") {
            return Err(SystemError::Malformed("unexpected dataset header".into()));
        }
        let n = cols.len() / 2;
        let mut pairs = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .trim()
                .split(',')
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| SystemError::Malformed(format!("bad number at row {row}: {t}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if vals.len() != 2 * n {
                return Err(SystemError::Malformed(format!(
                    "row {row} has {} fields, expected {}",
                    vals.len(),
                    2 * n
                )));
            }
            pairs.push(SamplePair::new(vals[..n].to_vec(), vals[n..].to_vec())?);
        }
        Self::from_pairs(pairs)
    }

    pub fn load_csv(path: &Path) -> Result<Self, SystemError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// A unit vector drawn uniformly from the sphere by normalizing a
/// standard Gaussian draw (dimension-agnostic and isotropic).
pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm(&v);
        if nv > 1e-3 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Draws `count` one-step observations of the open-loop system with
/// `u = 0`: states i.i.d. uniform on the sphere, modes i.i.d. uniform on
/// `{1, …, M}`, labels discarded.
pub fn sample_dataset(
    sys: &SwitchedSystem,
    count: usize,
    seed: u64,
) -> Result<SampleSet, SystemError> {
    sample_dataset_traced(sys, count, seed).map(|(set, _)| set)
}

/// White-box variant of [`sample_dataset`] that also returns the hidden
/// mode labels. For validation only — the labels must never reach
/// solver-facing files.
#[doc(hidden)]
pub fn sample_dataset_traced(
    sys: &SwitchedSystem,
    count: usize,
    seed: u64,
) -> Result<(SampleSet, Vec<usize>), SystemError> {
    if count == 0 {
        return Err(SystemError::DimensionMismatch("sample count must be at least 1".into()));
    }
    let mut state_rng = ChaCha8Rng::seed_from_u64(seed);
    state_rng.set_stream(STATE_STREAM);
    let mut mode_rng = ChaCha8Rng::seed_from_u64(seed);
    mode_rng.set_stream(MODE_STREAM);

    let zero_input = vec![0.0; sys.input_dim()];
    let mut pairs = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let x = random_unit_vector(sys.state_dim(), &mut state_rng);
        let mode = mode_rng.random_range(1..=sys.mode_count());
        let y = sys.step(&x, mode, &zero_input)?;
        pairs.push(SamplePair { x, y });
        labels.push(mode);
    }
    let set = SampleSet {
        pairs,
        dim: sys.state_dim(),
        seed: Some(seed),
        declared_modes: Some(sys.mode_count()),
    };
    Ok((set, labels))
}

/// One raw input-state record `(x, x⁺, u)` prior to normalization.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub x: Vec<f64>,
    pub x_next: Vec<f64>,
    pub u: Vec<f64>,
}

/// Output of [`normalize_dataset`]: the scaled pairs plus the indices of
/// rows rejected for degenerate states.
#[derive(Debug, Clone)]
pub struct NormalizedData {
    pub set: SampleSet,
    pub rejected: Vec<usize>,
}

/// Converts raw input-state data into sphere-normalized pairs
/// `(x/‖x‖, (x⁺ − Bu)/‖x‖)`. Rows with `‖x‖ ≤ 1e-12` are skipped and
/// reported in `rejected`.
pub fn normalize_dataset(raw: &[RawRecord], b: &Matrix) -> Result<NormalizedData, SystemError> {
    let mut pairs = Vec::with_capacity(raw.len());
    let mut rejected = Vec::new();
    for (row, rec) in raw.iter().enumerate() {
        if rec.x.len() != b.rows() || rec.x_next.len() != b.rows() {
            return Err(SystemError::DimensionMismatch(format!(
                "row {row} has state length {} against input matrix height {}",
                rec.x.len(),
                b.rows()
            )));
        }
        if rec.u.len() != b.cols() {
            return Err(SystemError::DimensionMismatch(format!(
                "row {row} has input length {}, expected {}",
                rec.u.len(),
                b.cols()
            )));
        }
        let nx = norm(&rec.x);
        if nx <= 1e-12 {
            rejected.push(row);
            continue;
        }
        let bu = b.mul_vec(&rec.u);
        let x: Vec<f64> = rec.x.iter().map(|v| v / nx).collect();
        let y: Vec<f64> = rec
            .x_next
            .iter()
            .zip(&bu)
            .map(|(xp, bui)| (xp - bui) / nx)
            .collect();
        pairs.push(SamplePair { x, y });
    }
    if pairs.is_empty() {
        return Err(SystemError::DegenerateState { row: 0, norm: 0.0 });
    }
    let set = SampleSet::from_pairs(pairs)?;
    Ok(NormalizedData { set, rejected })
}

/// Simulates `x(t+1) = (A_σ(t) + BK) x(t)` for `steps` steps with the
/// switching signal drawn i.i.d. uniform from the seed. Returns the
/// `steps + 1` visited states including `x0`.
pub fn simulate_closed_loop(
    sys: &SwitchedSystem,
    k: &Matrix,
    x0: &[f64],
    steps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SystemError> {
    if k.rows() != sys.input_dim() || k.cols() != sys.state_dim() {
        return Err(SystemError::DimensionMismatch(format!(
            "feedback is {}x{}, expected {}x{}",
            k.rows(),
            k.cols(),
            sys.input_dim(),
            sys.state_dim()
        )));
    }
    if x0.len() != sys.state_dim() {
        return Err(SystemError::DimensionMismatch("initial state has wrong length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SWITCH_STREAM);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let mode = rng.random_range(1..=sys.mode_count());
        let u = k.mul_vec(&x);
        x = sys.step(&x, mode, &u)?;
        states.push(x.clone());
    }
    Ok(states)
}

/// The three-mode planar benchmark system used throughout the test suite.
pub fn three_mode_benchmark() -> SwitchedSystem {
    SwitchedSystem::new(
        vec![
            Matrix::from_rows(&[vec![1.2, 0.9], vec![-0.1, 0.8]]),
            Matrix::from_rows(&[vec![1.8, 3.2], vec![-0.5, -0.16]]),
            Matrix::from_rows(&[vec![-0.7, -1.2], vec![0.6, 1.4]]),
        ],
        Matrix::from_rows(&[vec![1.0], vec![1.0]]),
    )
    .expect("benchmark system is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_at_the_origin_stays_there() {
        let sys = three_mode_benchmark();
        let y = sys.step(&[0.0, 0.0], 2, &[0.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn step_reads_out_the_first_mode_column() {
        let sys = three_mode_benchmark();
        let y = sys.step(&[1.0, 0.0], 1, &[0.0]).unwrap();
        assert_eq!(y, vec![1.2, -0.1]);
        let with_input = sys.step(&[1.0, 0.0], 1, &[1.0]).unwrap();
        assert_eq!(with_input, vec![2.2, 0.9]);
    }

    #[test]
    fn step_rejects_bad_modes_and_dimensions() {
        let sys = three_mode_benchmark();
        assert!(matches!(
            sys.step(&[1.0, 0.0], 0, &[0.0]),
            Err(SystemError::BadMode { .. })
        ));
        assert!(matches!(
            sys.step(&[1.0, 0.0], 4, &[0.0]),
            Err(SystemError::BadMode { .. })
        ));
        assert!(matches!(
            sys.step(&[1.0], 1, &[0.0]),
            Err(SystemError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sampling_is_reproducible_from_the_seed() {
        let sys = three_mode_benchmark();
        let a = sample_dataset(&sys, 5, 42).unwrap();
        let b = sample_dataset(&sys, 5, 42).unwrap();
        assert_eq!(a.pairs(), b.pairs());
        let c = sample_dataset(&sys, 5, 43).unwrap();
        assert_ne!(a.pairs()[0], c.pairs()[0]);
    }

    #[test]
    fn sphere_samples_average_out() {
        let sys = three_mode_benchmark();
        let set = sample_dataset(&sys, 10_000, 7).unwrap();
        let mut mean = vec![0.0; 2];
        for p in set.pairs() {
            mean[0] += p.x()[0];
            mean[1] += p.x()[1];
            assert!((norm(p.x()) - 1.0).abs() < 1e-12);
        }
        mean.iter_mut().for_each(|v| *v /= set.len() as f64);
        assert!(norm(&mean) <= 0.05, "mean norm {}", norm(&mean));
    }

    #[test]
    fn hidden_modes_are_roughly_balanced() {
        let sys = three_mode_benchmark();
        let (_, labels) = sample_dataset_traced(&sys, 10_000, 11).unwrap();
        for mode in 1..=3 {
            let count = labels.iter().filter(|&&l| l == mode).count();
            assert!(
                (count as i64 - 3333).abs() <= 200,
                "mode {mode} drawn {count} times"
            );
        }
    }

    #[test]
    fn every_successor_matches_some_mode() {
        let sys = three_mode_benchmark();
        let set = sample_dataset(&sys, 200, 3).unwrap();
        for p in set.pairs() {
            let hit = sys.modes().iter().any(|a| {
                let ax = a.mul_vec(p.x());
                ax.iter().zip(p.y()).all(|(u, v)| (u - v).abs() < 1e-12)
            });
            assert!(hit, "successor is not produced by any mode");
        }
    }

    #[test]
    fn normalization_applies_the_scaling_rule() {
        let sys = three_mode_benchmark();
        let a = &sys.modes()[0];
        let x = vec![0.6, 0.8]; // unit
        let ax = a.mul_vec(&x);

        // Already normalized, zero input: unchanged.
        let rec = RawRecord { x: x.clone(), x_next: ax.clone(), u: vec![0.0] };
        let out = normalize_dataset(&[rec], sys.input_matrix()).unwrap();
        assert!(out.rejected.is_empty());
        let p = &out.set.pairs()[0];
        for (got, want) in p.x().iter().zip(&x) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in p.y().iter().zip(&ax) {
            assert!((got - want).abs() < 1e-15);
        }

        // Scaled state with a nonzero input folds back to (x, Ax).
        let u = vec![0.7];
        let bu = sys.input_matrix().mul_vec(&u);
        let rec = RawRecord {
            x: x.iter().map(|v| 2.0 * v).collect(),
            x_next: ax.iter().zip(&bu).map(|(a, b)| 2.0 * a + b).collect(),
            u,
        };
        let out = normalize_dataset(&[rec], sys.input_matrix()).unwrap();
        let p = &out.set.pairs()[0];
        for (got, want) in p.x().iter().zip(&x) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in p.y().iter().zip(&ax) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_rows_are_rejected_but_logged() {
        let sys = three_mode_benchmark();
        let good = RawRecord { x: vec![1.0, 0.0], x_next: vec![1.2, -0.1], u: vec![0.0] };
        let bad = RawRecord { x: vec![0.0, 0.0], x_next: vec![0.0, 0.0], u: vec![0.0] };
        let out = normalize_dataset(&[bad, good], sys.input_matrix()).unwrap();
        assert_eq!(out.rejected, vec![0]);
        assert_eq!(out.set.len(), 1);
    }

    #[test]
    fn simulation_from_the_origin_stays_at_zero() {
        let sys = three_mode_benchmark();
        let k = Matrix::from_rows(&[vec![-0.3, -0.7]]);
        let traj = simulate_closed_loop(&sys, &k, &[0.0, 0.0], 10, 1).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.iter().all(|x| x.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn scalar_contraction_halves_the_norm() {
        // Single mode A = 0, B = I, K = 0.5·I gives A + BK = 0.5·I.
        let sys = SwitchedSystem::new(vec![Matrix::zeros(2, 2)], Matrix::identity(2)).unwrap();
        let k = Matrix::identity(2).scale(0.5);
        let traj = simulate_closed_loop(&sys, &k, &[1.0, 0.0], 3, 5).unwrap();
        let norms: Vec<f64> = traj.iter().map(|x| norm(x)).collect();
        for (t, want) in [1.0, 0.5, 0.25, 0.125].iter().enumerate() {
            assert!((norms[t] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn open_loop_simulation_reproduces_matrix_powers() {
        let a = Matrix::from_rows(&[vec![0.4, 0.3], vec![-0.2, 0.9]]);
        let sys = SwitchedSystem::new(vec![a.clone()], Matrix::zeros(2, 1)).unwrap();
        let k = Matrix::zeros(1, 2);
        let x0 = [0.6, -0.8];
        let traj = simulate_closed_loop(&sys, &k, &x0, 6, 9).unwrap();
        let mut expect = x0.to_vec();
        for t in 1..=6 {
            expect = a.mul_vec(&expect);
            for (got, want) in traj[t].iter().zip(&expect) {
                assert!((got - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let sys = three_mode_benchmark();
        let set = sample_dataset(&sys, 25, 123).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = SampleSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(set.pairs(), back.pairs());
    }

    #[test]
    fn system_json_round_trip() {
        let sys = three_mode_benchmark();
        let back = SwitchedSystem::from_json_str(&sys.to_json_string()).unwrap();
        assert_eq!(back.mode_count(), 3);
        for (a, b) in sys.modes().iter().zip(back.modes()) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
        assert_eq!(sys.input_matrix().as_slice(), back.input_matrix().as_slice());
    }
}
