//! `permadmm` — solvers, spectral certification, and the benchmark grid from
//! the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure (singular
//! matrix, eigensolver breakdown).

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use permadmm::bench::{self, ExperimentSpec};
use permadmm::densenum::Matrix;
use permadmm::model::{
    self, counterexample_instance, enumerate_permutations, BlockPartition, Dist, ProblemInstance,
    RandomSpec,
};
use permadmm::rng::{derive_seed, Rng};
use permadmm::solvers::{run_until, Algo, SolverConfig};
use permadmm::spectral;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE_ERROR: u8 = 1;
const NUMERICAL_ERROR: u8 = 2;

/// Master-seed fallback when --seed is not given.
const SEED_ENV: &str = "PERMADMM_SEED";

#[derive(Parser)]
#[command(
    name = "permadmm",
    version,
    about = "Multi-block ADMM with randomized update orders: solve, benchmark, certify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one algorithm and print the run outcome.
    Solve(SolveArgs),
    /// Run the benchmark grid and print or write per-cell statistics.
    Bench(BenchArgs),
    /// Spectral toolkit.
    #[command(subcommand)]
    Spectral(SpectralCmd),
}

#[derive(Args)]
struct SolveArgs {
    /// Coefficient matrix as headerless CSV.
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side CSV (defaults to b = 0).
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// Comma-separated block sizes (defaults to one coordinate per block).
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    /// Algorithm: cyclic, rp, p_radmm, pd_radmm, gd.
    #[arg(long, default_value = "rp")]
    algo: Algo,
    /// Relative-error target in (0, 1).
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Seed (falls back to PERMADMM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Round cap (default depends on dimension).
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Write a machine-readable outcome CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Distributions: gaussian, lognormal, uniform, circulant_hankel.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gaussian,lognormal,uniform,circulant_hankel"
    )]
    dist: Vec<Dist>,
    /// Sizes N (coordinates; one block each).
    #[arg(long, value_delimiter = ',', default_value = "3,10")]
    n: Vec<usize>,
    /// Instances per (dist, N) cell.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    /// Accuracy targets, each in (0, 1).
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3")]
    eps: Vec<f64>,
    /// Algorithms to run.
    #[arg(long, value_delimiter = ',', default_value = "cyclic,rp,gd")]
    algos: Vec<Algo>,
    /// Master seed (falls back to PERMADMM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Round cap override.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Worker-thread cap (default: all cores; results are identical).
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the per-instance spectral classification column.
    #[arg(long)]
    no_spectral: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print a markdown table of the grid.
    #[arg(long)]
    markdown: bool,
}

#[derive(Subcommand)]
enum SpectralCmd {
    /// Per-order and expected update matrices of one instance: rho(M_sigma)
    /// for every order, Q, the tau spectrum, rho(M) both ways, and the
    /// eigenvalue-map mismatch.
    Report(InstanceArgs),
    /// Randomized certification that eig(A Q A^T) stays inside (0, 4/3).
    Certify(CertifyArgs),
    /// Reconstruction error of Q from its block-permutation decomposition.
    Prop1(InstanceArgs),
    /// The 3x3 divergence counterexample: rho(M_sigma) for all six orders
    /// (each above 1.02) against rho(M) below 1.
    Counterexample,
    /// Hill-climbing search for the largest reachable tau.
    Tighten(TightenArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Coefficient matrix CSV; omit to generate from --dist/--n/--seed.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Comma-separated block sizes (defaults to unit blocks).
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    /// Distribution for a generated instance.
    #[arg(long, default_value = "gaussian")]
    dist: Dist,
    /// Dimension for a generated instance.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Seed (falls back to PERMADMM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Certify a single matrix instead of a random sweep.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Comma-separated block sizes for --matrix.
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    /// Distributions for the random sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gaussian,lognormal,uniform,circulant_hankel"
    )]
    dists: Vec<Dist>,
    /// Instances per distribution.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    /// Smallest block count.
    #[arg(long, default_value_t = 2)]
    min_n: usize,
    /// Largest block count.
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    /// Master seed (falls back to PERMADMM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TightenArgs {
    /// Block count of the search space.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Evaluation budget.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Seed (falls back to PERMADMM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the best matrix found as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(USAGE_ERROR)
                }
            }
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(NUMERICAL_ERROR)
        }
    }
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<model::IoError> for CliError {
    fn from(e: model::IoError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<spectral::SpectralError> for CliError {
    fn from(e: spectral::SpectralError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn seed_or_env(seed: Option<u64>) -> u64 {
    seed.or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!(
            "--eps must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), CliError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CliError::Usage(format!(
            "--beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

/// Build an instance from a matrix file plus optional blocks and rhs.
fn load_instance(
    matrix: &Path,
    rhs: Option<&PathBuf>,
    blocks: Option<&[usize]>,
) -> Result<ProblemInstance, CliError> {
    let a = model::read_matrix(matrix)?;
    if !a.is_square() {
        return Err(CliError::Usage(format!(
            "--matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let b = match rhs {
        Some(p) => model::read_matrix(p)?,
        None => Matrix::zeros(n, 1),
    };
    let partition = match blocks {
        Some(sizes) => {
            if sizes.contains(&0) {
                return Err(CliError::Usage("--blocks entries must be >= 1".into()));
            }
            let total: usize = sizes.iter().sum();
            if total != n {
                return Err(CliError::Usage(format!(
                    "--blocks sum to {total} but the matrix dimension is {n}"
                )));
            }
            BlockPartition::new(sizes.to_vec())
        }
        None => BlockPartition::unit(n),
    };
    ProblemInstance::new(a, b, partition).map_err(|e| CliError::Usage(e.to_string()))
}

fn generated_or_loaded(args: &InstanceArgs) -> Result<ProblemInstance, CliError> {
    if let Some(path) = &args.matrix {
        return load_instance(path, None, args.blocks.as_deref());
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let seed = seed_or_env(args.seed);
    let inst = match &args.blocks {
        Some(sizes) => {
            if sizes.contains(&0) {
                return Err(CliError::Usage("--blocks entries must be >= 1".into()));
            }
            let total: usize = sizes.iter().sum();
            if total != args.n {
                return Err(CliError::Usage(format!(
                    "--blocks sum to {total} but --n is {}",
                    args.n
                )));
            }
            model::generate_with_partition(args.dist, BlockPartition::new(sizes.clone()), seed)
        }
        None => model::generate_instance(&RandomSpec {
            dist: args.dist,
            n_coords: args.n,
            seed,
        }),
    };
    Ok(inst)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Spectral(SpectralCmd::Report(args)) => cmd_report(args),
        Command::Spectral(SpectralCmd::Certify(args)) => cmd_certify(args),
        Command::Spectral(SpectralCmd::Prop1(args)) => cmd_prop1(args),
        Command::Spectral(SpectralCmd::Counterexample) => cmd_counterexample(),
        Command::Spectral(SpectralCmd::Tighten(args)) => cmd_tighten(args),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    check_eps(args.eps)?;
    check_beta(args.beta)?;
    let inst = load_instance(&args.matrix, args.rhs.as_ref(), args.blocks.as_deref())?;
    let mut config = SolverConfig::new(args.eps, seed_or_env(args.seed));
    config.beta = args.beta;
    config.max_rounds = args
        .max_rounds
        .unwrap_or_else(|| SolverConfig::default_max_rounds(inst.dim()));
    let out = run_until(&inst, &config, args.algo);
    println!(
        "algo={} eps={} seed={} status={} iterations={} rel_error={}",
        args.algo, args.eps, config.init_seed, out.status, out.iterations, out.final_rel_error
    );
    if let Some(path) = args.out {
        let text = format!(
            "algo,epsilon,seed,status,iterations,final_rel_error\n{},{},{},{},{},{}\n",
            args.algo, args.eps, config.init_seed, out.status, out.iterations, out.final_rel_error
        );
        std::fs::write(&path, text).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    for &e in &args.eps {
        check_eps(e)?;
    }
    check_beta(args.beta)?;
    if args.instances == 0 {
        return Err(CliError::Usage("--instances must be >= 1".into()));
    }
    if args.n.contains(&0) {
        return Err(CliError::Usage("--n entries must be >= 1".into()));
    }
    let mut spec = ExperimentSpec::new(
        args.dist,
        args.n,
        args.instances,
        args.eps,
        args.algos,
        seed_or_env(args.seed),
    );
    spec.beta = args.beta;
    spec.max_rounds = args.max_rounds;
    spec.spectral_check = !args.no_spectral;
    let results = bench::run_grid_with_threads(&spec, args.threads);
    let csv = bench::to_csv(&results);
    match &args.out {
        Some(path) => std::fs::write(path, &csv).map_err(|e| CliError::Usage(e.to_string()))?,
        None => print!("{csv}"),
    }
    if args.markdown {
        print!("{}", bench::to_markdown(&results));
    }
    Ok(())
}

fn cmd_report(args: InstanceArgs) -> Result<(), CliError> {
    let inst = generated_or_loaded(&args)?;
    let n = inst.n_blocks();
    for sigma in enumerate_permutations(n).map_err(|e| CliError::Numerical(e.to_string()))? {
        let u = spectral::build_augmented(&inst, &sigma)?;
        println!(
            "sigma {}: rho(M_sigma) = {}",
            sigma,
            spectral::rho(&u.m_sigma)?
        );
    }
    let em = spectral::m_matrix(&inst)?;
    println!("Q =");
    print!("{}", model::format_matrix(&em.q));
    let taus = spectral::tau_spectrum(&inst, &em.q)?;
    println!("eig(A Q A^T) = {taus:?}");
    let rho_eig = spectral::rho(&em.m)?;
    let rho_tau = spectral::rho_from_taus(&taus);
    println!("rho(M) [general eigensolver] = {rho_eig}");
    println!("rho(M) [from tau spectrum]   = {rho_tau}");
    let rep = spectral::lemma1_check(&em.m, &taus)?;
    println!(
        "eigenvalue-map mismatch: forward {} backward {}",
        rep.forward_max, rep.backward_max
    );
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    if let Some(path) = &args.matrix {
        let inst = load_instance(path, None, args.blocks.as_deref())?;
        // the containment claim presumes a nonsingular coefficient matrix
        permadmm::densenum::LuFactors::factor(&inst.a)
            .map_err(|e| CliError::Numerical(format!("coefficient matrix: {e}")))?;
        let report = spectral::certify_instance(&inst)?;
        println!("taus = {:?}", report.taus);
        println!("rho(M) = {}", report.rho_m);
        println!("lemma1 max mismatch = {}", report.lemma1_max_mismatch);
        println!("prop1 max entry error = {}", report.prop1_max_entry_error);
        for (k, (lo, hi)) in report.theta_bounds.iter().enumerate() {
            println!("theta bounds k={}: [{lo}, {hi}]", k + 1);
        }
        let ok = report.taus.iter().all(|&t| t > 0.0 && t < 4.0 / 3.0);
        println!(
            "eig(A Q A^T) in (0, 4/3): {}",
            if ok { "yes" } else { "NO" }
        );
        return Ok(());
    }

    if args.min_n < 1 || args.max_n < args.min_n {
        return Err(CliError::Usage(
            "--min-n/--max-n must satisfy 1 <= min <= max".into(),
        ));
    }
    if args.instances == 0 {
        return Err(CliError::Usage("--instances must be >= 1".into()));
    }
    let master = seed_or_env(args.seed);
    println!(
        "certifying eig(A Q A^T) in (0, 4/3): {} instances per distribution, n in [{}, {}], mixed block sizes",
        args.instances, args.min_n, args.max_n
    );
    let mut total_violations = 0usize;
    let mut total_skipped = 0usize;
    for &dist in &args.dists {
        let mut min_low = f64::INFINITY;
        let mut min_high = f64::INFINITY;
        let mut violations = 0usize;
        let mut skipped = 0usize;
        for idx in 0..args.instances {
            let seed = derive_seed(master, &[dist.tag(), idx as u64]);
            let mut srng = Rng::seed_from(derive_seed(seed, &[11]));
            let n_blocks = args.min_n + (srng.below((args.max_n - args.min_n + 1) as u64) as usize);
            let sizes: Vec<usize> = (0..n_blocks).map(|_| 1 + srng.below(3) as usize).collect();
            let inst = model::generate_with_partition(dist, BlockPartition::new(sizes), seed);
            match spectral::certify_lemma2(&inst) {
                Ok(rep) => {
                    let (lo, hi) = rep.margins();
                    min_low = min_low.min(lo);
                    min_high = min_high.min(hi);
                    if !rep.in_bounds() {
                        violations += 1;
                    }
                }
                Err(_) => skipped += 1, // singular draw; tallied, not certified
            }
        }
        println!(
            "{dist}: violations={violations} skipped_singular={skipped} min_margin_low={min_low} min_margin_high={min_high}"
        );
        total_violations += violations;
        total_skipped += skipped;
    }
    println!("total violations = {total_violations}, skipped = {total_skipped}");
    if total_violations > 0 {
        return Err(CliError::Numerical(format!(
            "{total_violations} instances violated the (0, 4/3) bound"
        )));
    }
    Ok(())
}

fn cmd_prop1(args: InstanceArgs) -> Result<(), CliError> {
    let inst = generated_or_loaded(&args)?;
    let rep = spectral::prop1_reconstruct(&inst)?;
    println!(
        "decomposition reconstruction: max entry error = {}",
        rep.max_entry_error
    );
    Ok(())
}

fn cmd_counterexample() -> Result<(), CliError> {
    let inst = counterexample_instance();
    for sigma in enumerate_permutations(3).unwrap() {
        let u = spectral::build_augmented(&inst, &sigma)?;
        let r = spectral::rho(&u.m_sigma)?;
        println!("sigma {sigma}: rho(M_sigma) = {r}");
    }
    let em = spectral::m_matrix(&inst)?;
    let r = spectral::rho(&em.m)?;
    println!("rho(M) = {r}");
    Ok(())
}

fn cmd_tighten(args: TightenArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let mut rng = Rng::seed_from(seed_or_env(args.seed));
    let res = spectral::tightness_search(args.n, args.trials, &mut rng)?;
    println!(
        "best tau = {} over {} evaluations (bound 4/3 = {}); max seen = {}",
        res.best_tau,
        res.evaluations,
        4.0 / 3.0,
        res.max_tau_seen
    );
    if let Some(path) = args.out {
        model::write_matrix(&path, &res.best_a)?;
        println!("best matrix written to {}", path.display());
    }
    Ok(())
}
