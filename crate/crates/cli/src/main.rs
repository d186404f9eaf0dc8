//! Command-line front end: sampling, synthesis, certification, white-box
//! validation, and plottable data exports.
//!
//! Exit codes: 0 success with an informative certificate, 1 usage or I/O
//! failure, 2 solver failure, 3 vacuous certificate (bound at or above
//! one, or infinite). All randomness flows from `--seed`; worker count is
//! capped by `STAB_MAX_THREADS`.

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use switchstab::certification::{certify, jsr_bracket, whitebox_cqlf_bound, Bound, CertError};
use switchstab::geometry::{
    cap_measure, epsilon_chain, ConfidenceQuery, ConfidenceTarget, GeometryError,
};
use switchstab::soslift::{lifted_p_step, LiftBasis, RateExponent};
use switchstab::synthesis::{alternate, SolverConfig, SynthesisResult};
use switchstab::system::{
    random_unit_vector, sample_dataset, simulate_closed_loop, SampleSet, SwitchedSystem,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_SOLVER: i32 = 2;
const EXIT_VACUOUS: i32 = 3;

#[derive(Parser)]
#[command(
    name = "switchstab",
    about = "Data-driven stabilization of black-box switched linear systems with probabilistic spectral-radius certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one-step open-loop samples from a system file into a CSV dataset.
    Sample(SampleArgs),
    /// Synthesize a feedback from a dataset and attach a certificate.
    Synthesize(SynthesizeArgs),
    /// Re-certify an existing synthesis result at a new confidence target.
    Certify(CertifyArgs),
    /// Exact quadratic bound and product bracket from the true model.
    Whitebox(WhiteboxArgs),
    /// Export the spherical-cap measure curves over a theta grid.
    Capcurve(CapcurveArgs),
    /// Simulate closed-loop trajectories under a synthesized gain.
    Trajectories(TrajArgs),
    /// Sweep sample sizes: certificate vs white-box reference per cell.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// Number of samples to draw.
    #[arg(short = 'N', long = "samples", value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// System JSON file (supplies the known input matrix and mode count).
    #[arg(long)]
    system: PathBuf,
    /// Dataset CSV produced by `sample` (or normalized externally).
    #[arg(long)]
    dataset: PathBuf,
    /// Target probability that the certificate's covering event fails.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Outer stopping tolerance of the alternation.
    #[arg(long = "eps-tol", default_value_t = 0.1)]
    eps_tol: f64,
    /// Subproblem tolerance.
    #[arg(long = "inner-tol", default_value_t = 1e-6)]
    inner_tol: f64,
    /// Also run the lifted analysis step at this degree.
    #[arg(long = "sos-degree")]
    sos_degree: Option<u32>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Synthesis result JSON.
    #[arg(long)]
    result: PathBuf,
    /// System JSON file (dimension and mode count).
    #[arg(long)]
    system: PathBuf,
    /// Sample count behind the result.
    #[arg(short = 'N', long = "samples", value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Confidence violation target (mutually exclusive with --epsilon).
    #[arg(long, conflicts_with = "epsilon")]
    beta: Option<f64>,
    /// Covering parameter (bypasses the beta bisection).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WhiteboxArgs {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// Optional synthesis result; when given, the closed-loop matrices
    /// A + BK are analyzed instead of the raw modes.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Bisection tolerance on the quadratic bound.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Product enumeration depth for the bracket.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CapcurveArgs {
    /// Ambient dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 10])]
    dims: Vec<usize>,
    /// Grid points over [0, pi/2].
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u64).range(2..))]
    points: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrajArgs {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// Synthesis result JSON carrying the gain.
    #[arg(long)]
    result: PathBuf,
    /// Number of trajectories.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Steps per trajectory.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Base seed; per-trajectory streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: files land at <prefix>_s<i>.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// Sample counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 300, 1000, 3000])]
    grid: Vec<usize>,
    /// Independent repetitions per sample count.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Confidence violation target per cell.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Base seed; per-cell streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outer stopping tolerance of the alternation.
    #[arg(long = "eps-tol", default_value_t = 0.1)]
    eps_tol: f64,
    /// Subproblem tolerance.
    #[arg(long = "inner-tol", default_value_t = 1e-6)]
    inner_tol: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Whitebox(a) => cmd_whitebox(a),
        Command::Capcurve(a) => cmd_capcurve(a),
        Command::Trajectories(a) => cmd_trajectories(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            std::process::exit(failure.code);
        }
    }
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Self { code: EXIT_USAGE, error }
    }

    fn solver(error: anyhow::Error) -> Self {
        Self { code: EXIT_SOLVER, error }
    }
}

fn load_system(path: &Path) -> Result<SwitchedSystem, Failure> {
    SwitchedSystem::load(path)
        .with_context(|| format!("loading system file {}", path.display()))
        .map_err(Failure::usage)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::usage)
}

fn cmd_sample(args: SampleArgs) -> Result<i32, Failure> {
    let sys = load_system(&args.system)?;
    let set = sample_dataset(&sys, args.samples as usize, args.seed)
        .map_err(|e| Failure::solver(anyhow!(e)))?;
    set.save_csv(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::usage)?;
    println!(
        "sampled N={} pairs in dimension {} (seed {}) -> {}",
        set.len(),
        set.dim(),
        args.seed,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn certificate_exit(bound: &Bound, gamma: f64) -> i32 {
    match bound {
        Bound::Finite(v) if *v < 1.0 && gamma < 1.0 => EXIT_OK,
        _ => EXIT_VACUOUS,
    }
}

fn print_epsilon_chain(n: usize, eps: f64) {
    if let Ok(chain) = epsilon_chain(n, eps) {
        println!(
            "epsilon chain: eps={:.6e} theta={:.6e} delta(theta/2)={:.6e} delta(theta/4)={:.6e}",
            chain.epsilon, chain.theta, chain.delta_half, chain.delta_quarter
        );
    }
}

fn cmd_synthesize(args: SynthesizeArgs) -> Result<i32, Failure> {
    let sys = load_system(&args.system)?;
    let data = SampleSet::load_csv(&args.dataset)
        .with_context(|| format!("loading dataset {}", args.dataset.display()))
        .map_err(Failure::usage)?;
    if data.dim() != sys.state_dim() {
        return Err(Failure::usage(anyhow!(
            "dataset dimension {} does not match the system dimension {}",
            data.dim(),
            sys.state_dim()
        )));
    }
    let cfg = SolverConfig {
        eps_tol: args.eps_tol,
        inner_tol: args.inner_tol,
        ..SolverConfig::default()
    };
    let result = alternate(&data, sys.input_matrix(), &cfg)
        .map_err(|e| Failure::solver(anyhow!(e)))?;

    let query = ConfidenceQuery {
        dimension: sys.state_dim(),
        modes: sys.mode_count(),
        samples: data.len(),
        target: ConfidenceTarget::Beta(args.beta),
    };
    // A failed certificate does not invalidate the synthesis: the result
    // is still written and the rate reported honestly.
    let cert = match certify(&result, &query) {
        Ok(c) => Some(c),
        Err(CertError::Geometry(GeometryError::NoSolution { min_beta })) => {
            eprintln!(
                "certificate unavailable: N = {} is too small for beta = {}; \
                 smallest achievable violation is {min_beta:.6e}",
                data.len(),
                args.beta
            );
            None
        }
        Err(CertError::Geometry(GeometryError::OutOfRange(reason))) => {
            eprintln!("certificate unavailable: {reason}");
            None
        }
        Err(e) => return Err(Failure::solver(anyhow!(e))),
    };

    let mut out = result.to_json_value();
    out["certificate"] = match &cert {
        Some(c) => serde_json::to_value(c).expect("certificate serializes"),
        None => serde_json::Value::Null,
    };

    if let Some(degree) = args.sos_degree {
        let basis = LiftBasis::new(sys.state_dim(), degree)
            .map_err(|e| Failure::usage(anyhow!(e)))?;
        let (_, gamma_d) = lifted_p_step(
            &result.k,
            &data,
            sys.input_matrix(),
            &basis,
            result.gamma,
            RateExponent::TwoD,
            &cfg,
        )
        .map_err(|e| Failure::solver(anyhow!(e)))?;
        out["sos"] = serde_json::json!({
            "d": degree,
            "D": basis.dim(),
            "gamma_d": gamma_d,
        });
        println!("lifted rate at degree {degree}: gamma_d = {gamma_d:.6}");
    }

    write_json(&args.out, &out)?;
    match &cert {
        Some(cert) => {
            println!(
                "gamma = {:.6}, kappa = {:.4}, bound = {}, confidence = {:.6} -> {}",
                result.gamma,
                cert.kappa,
                match cert.bound {
                    Bound::Finite(v) => format!("{v:.6}"),
                    Bound::Infinite => "inf".into(),
                },
                cert.confidence,
                args.out.display()
            );
            print_epsilon_chain(sys.state_dim(), cert.epsilon);
            Ok(certificate_exit(&cert.bound, result.gamma))
        }
        None => {
            println!("gamma = {:.6}, no certificate -> {}", result.gamma, args.out.display());
            Ok(EXIT_VACUOUS)
        }
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<i32, Failure> {
    let sys = load_system(&args.system)?;
    let result = SynthesisResult::load(&args.result)
        .with_context(|| format!("loading result {}", args.result.display()))
        .map_err(Failure::usage)?;
    let target = match (args.beta, args.epsilon) {
        (None, Some(eps)) => ConfidenceTarget::Epsilon(eps),
        (Some(beta), None) => ConfidenceTarget::Beta(beta),
        (None, None) => ConfidenceTarget::Beta(0.01),
        (Some(_), Some(_)) => unreachable!("clap forbids the combination"),
    };
    let query = ConfidenceQuery {
        dimension: sys.state_dim(),
        modes: sys.mode_count(),
        samples: args.samples as usize,
        target,
    };
    let cert = match certify(&result, &query) {
        Ok(c) => c,
        Err(CertError::Geometry(GeometryError::NoSolution { min_beta })) => {
            return Err(Failure {
                code: EXIT_VACUOUS,
                error: anyhow!(
                    "N = {} is too small; smallest achievable violation is {min_beta:.6e}",
                    args.samples
                ),
            });
        }
        Err(e) => return Err(Failure::solver(anyhow!(e))),
    };
    write_json(
        &args.out,
        &serde_json::to_value(&cert).expect("certificate serializes"),
    )?;
    println!(
        "certified bound = {} at confidence {:.6} -> {}",
        match cert.bound {
            Bound::Finite(v) => format!("{v:.6}"),
            Bound::Infinite => "inf".into(),
        },
        cert.confidence,
        args.out.display()
    );
    print_epsilon_chain(sys.state_dim(), cert.epsilon);
    Ok(certificate_exit(&cert.bound, cert.gamma_sampled))
}

fn cmd_whitebox(args: WhiteboxArgs) -> Result<i32, Failure> {
    let sys = load_system(&args.system)?;
    let matrices = match &args.result {
        Some(path) => {
            let result = SynthesisResult::load(path)
                .with_context(|| format!("loading result {}", path.display()))
                .map_err(Failure::usage)?;
            sys.closed_loop_modes(result.k.matrix())
        }
        None => sys.modes().to_vec(),
    };
    let (gamma_star, p) =
        whitebox_cqlf_bound(&matrices, args.tol).map_err(|e| Failure::solver(anyhow!(e)))?;
    let (lower, upper) =
        jsr_bracket(&matrices, args.depth).map_err(|e| Failure::solver(anyhow!(e)))?;
    let out = serde_json::json!({
        "gamma_star": gamma_star,
        "P": p.to_dense().as_slice(),
        "n": p.order(),
        "jsr": { "lower": lower, "upper": upper, "depth": args.depth },
    });
    write_json(&args.out, &out)?;
    println!(
        "gamma_star = {gamma_star:.6}, jsr in [{lower:.6}, {upper:.6}] -> {}",
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_capcurve(args: CapcurveArgs) -> Result<i32, Failure> {
    let points = args.points as usize;
    let mut text = String::from("theta");
    for n in &args.dims {
        text.push_str(&format!(",delta_n{n}"));
    }
    text.push('\n');
    for i in 0..points {
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (points - 1) as f64;
        text.push_str(&format!("{theta:.16e}"));
        for &n in &args.dims {
            let v = cap_measure(n, theta).map_err(|e| Failure::usage(anyhow!(e)))?;
            text.push_str(&format!(",{v:.16e}"));
        }
        text.push('\n');
    }
    std::fs::write(&args.out, text)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::usage)?;
    println!(
        "cap measure curves for n in {:?} over {} grid points -> {}",
        args.dims,
        points,
        args.out.display()
    );
    Ok(EXIT_OK)
}

/// SplitMix64 step; derives independent per-task seeds from one base.
fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(b.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn cmd_trajectories(args: TrajArgs) -> Result<i32, Failure> {
    use rand::SeedableRng;
    let sys = load_system(&args.system)?;
    let result = SynthesisResult::load(&args.result)
        .with_context(|| format!("loading result {}", args.result.display()))
        .map_err(Failure::usage)?;
    let mut final_norms = Vec::with_capacity(args.count);
    for idx in 0..args.count {
        let traj_seed = derive_seed(args.seed, idx as u64, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(traj_seed);
        let x0 = random_unit_vector(sys.state_dim(), &mut rng);
        let states = simulate_closed_loop(&sys, result.k.matrix(), &x0, args.steps, traj_seed)
            .map_err(|e| Failure::solver(anyhow!(e)))?;
        let mut text = String::from("t");
        for j in 1..=sys.state_dim() {
            text.push_str(&format!(",x_{j}"));
        }
        text.push('\n');
        for (t, state) in states.iter().enumerate() {
            text.push_str(&t.to_string());
            for v in state {
                text.push_str(&format!(",{v:.16e}"));
            }
            text.push('\n');
        }
        let path = args.out.with_file_name(format!(
            "{}_s{idx}.csv",
            args.out.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
        ));
        std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::usage)?;
        let last = states.last().expect("at least the initial state");
        final_norms.push(last.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let worst = final_norms.iter().fold(0.0f64, |m, v| m.max(*v));
    println!(
        "wrote {} trajectories of {} steps; worst final norm {:.3e}",
        args.count, args.steps, worst
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Failure> {
    let sys = load_system(&args.system)?;
    let cfg = SolverConfig {
        eps_tol: args.eps_tol,
        inner_tol: args.inner_tol,
        ..SolverConfig::default()
    };
    let mut cells: Vec<(usize, u64)> = Vec::new();
    for &n in &args.grid {
        for rep in 0..args.seeds {
            cells.push((n, derive_seed(args.seed, n as u64, rep as u64)));
        }
    }
    // Cells are independent; rows come back in grid order regardless of
    // the schedule.
    let rows: Vec<Result<String, String>> =
        switchstab::exec::map_collect(&cells, |_, &(n_samples, cell_seed)| {
            let run = || -> anyhow::Result<String> {
                let data = sample_dataset(&sys, n_samples, cell_seed)?;
                let result = alternate(&data, sys.input_matrix(), &cfg)?;
                let query = ConfidenceQuery {
                    dimension: sys.state_dim(),
                    modes: sys.mode_count(),
                    samples: n_samples,
                    target: ConfidenceTarget::Beta(args.beta),
                };
                let cert = certify(&result, &query)?;
                let closed = sys.closed_loop_modes(result.k.matrix());
                let (gamma_star, _) = whitebox_cqlf_bound(&closed, 1e-5)?;
                let bound = match cert.bound {
                    Bound::Finite(v) => format!("{v:.16e}"),
                    Bound::Infinite => "inf".into(),
                };
                Ok(format!(
                    "{n_samples},{:.16e},{:.16e},{:.16e},{bound},{:.16e}",
                    cert.epsilon, result.gamma, cert.kappa, gamma_star
                ))
            };
            run().map_err(|e| format!("cell (N={n_samples}, seed={cell_seed}): {e:#}"))
        });

    let mut text = String::from("N,epsilon,gamma,kappa,bound,gamma_star\n");
    for row in rows {
        match row {
            Ok(line) => {
                text.push_str(&line);
                text.push('\n');
            }
            Err(msg) => return Err(Failure::solver(anyhow!(msg))),
        }
    }
    std::fs::write(&args.out, text)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::usage)?;
    println!(
        "swept N in {:?} with {} repetitions each -> {}",
        args.grid,
        args.seeds,
        args.out.display()
    );
    Ok(EXIT_OK)
}
