//! Benchmark grid: seeded random instances per distribution and size, every
//! configured algorithm and accuracy target, aggregated into per-cell
//! statistics.
//!
//! Reproducibility: per-instance seeds derive from
//! `(master_seed, dist, N, index)`, the shared start `y^0` of an instance is
//! the same for every algorithm, and instances run in a parallel map whose
//! results are reduced in index order, so counts and geometric means are
//! identical for any worker count and for any re-run subset.

use crate::model::Permutation;
use crate::model::{generate_instance, Dist, ProblemInstance, RandomSpec};
use crate::rng::derive_seed;
use crate::solvers::{run_until, Algo, RunStatus, SolverConfig};
use crate::spectral::{build_augmented, rho, SpectralError};
use rayon::prelude::*;

/// The experiment grid.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub dists: Vec<Dist>,
    pub sizes: Vec<usize>,
    /// Instances per (dist, N) cell.
    pub instances: usize,
    pub epsilons: Vec<f64>,
    pub algos: Vec<Algo>,
    pub master_seed: u64,
    pub beta: f64,
    /// Overrides the per-size default when set.
    pub max_rounds: Option<u64>,
    pub diverge_threshold: f64,
    /// Also classify each instance spectrally (cyclic order); adds an
    /// eigensolve per instance.
    pub spectral_check: bool,
}

impl ExperimentSpec {
    pub fn new(
        dists: Vec<Dist>,
        sizes: Vec<usize>,
        instances: usize,
        epsilons: Vec<f64>,
        algos: Vec<Algo>,
        master_seed: u64,
    ) -> Self {
        assert!(
            !dists.is_empty() && !sizes.is_empty() && !epsilons.is_empty() && !algos.is_empty()
        );
        assert!(instances >= 1);
        ExperimentSpec {
            dists,
            sizes,
            instances,
            epsilons,
            algos,
            master_seed,
            beta: 1.0,
            max_rounds: None,
            diverge_threshold: 1e8,
            spectral_check: true,
        }
    }
}

/// Aggregated result of one (dist, N, algo, epsilon) cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub dist: Dist,
    pub n: usize,
    pub algo: Algo,
    pub epsilon: f64,
    pub instances: usize,
    pub converged: usize,
    pub diverged: usize,
    pub stalled: usize,
    pub invalid: usize,
    /// Geometric mean of iteration counts. Base set: converged runs only for
    /// cyclic ADMM; all non-invalid runs otherwise, a diverged or stalled
    /// run contributing `max_rounds`. Absent when the base set is empty.
    pub geomean_iters: Option<f64>,
    /// How many runs fed the geometric mean at `max_rounds` because they did
    /// not converge.
    pub geomean_capped: usize,
    /// Fraction of instances whose cyclic round map has spectral radius
    /// above 1 (NaN when the spectral check is disabled).
    pub spectral_div_frac: f64,
    pub master_seed: u64,
}

impl CellResult {
    /// Diverged and stalled both count against convergence (the divergence
    /// column convention).
    pub fn divergence_fraction(&self) -> f64 {
        (self.diverged + self.stalled) as f64 / self.instances as f64
    }
}

/// [`run_grid`] under a bounded worker pool (`None` = all cores). Results
/// are identical either way.
pub fn run_grid_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Vec<CellResult> {
    match threads {
        None => run_grid(spec),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .expect("thread pool");
            pool.install(|| run_grid(spec))
        }
    }
}

/// Spectral divergence test for the cyclic order: `rho(M_id) > 1 + 1e-9`.
pub fn spectral_classify_cyclic(inst: &ProblemInstance) -> Result<bool, SpectralError> {
    let sigma = Permutation::identity(inst.n_blocks());
    let u = build_augmented(inst, &sigma)?;
    Ok(rho(&u.m_sigma)? > 1.0 + 1e-9)
}

struct InstanceRecord {
    // per (epsilon, algo): status and iterations
    outcomes: Vec<(RunStatus, u64)>,
    spectral_diverges: Option<bool>,
}

/// Run the whole grid. Cells are processed in order; instances within a cell
/// run in parallel.
pub fn run_grid(spec: &ExperimentSpec) -> Vec<CellResult> {
    let mut results = Vec::new();
    for &dist in &spec.dists {
        for &n in &spec.sizes {
            let records: Vec<InstanceRecord> = (0..spec.instances)
                .into_par_iter()
                .map(|idx| run_instance(spec, dist, n, idx))
                .collect();
            results.extend(aggregate_cell(spec, dist, n, &records));
        }
    }
    results
}

fn run_instance(spec: &ExperimentSpec, dist: Dist, n: usize, idx: usize) -> InstanceRecord {
    let instance_seed = derive_seed(spec.master_seed, &[dist.tag(), n as u64, idx as u64]);
    let inst = generate_instance(&RandomSpec {
        dist,
        n_coords: n,
        seed: instance_seed,
    });
    let init_seed = derive_seed(instance_seed, &[7]);
    let max_rounds = spec
        .max_rounds
        .unwrap_or_else(|| SolverConfig::default_max_rounds(n));

    let mut outcomes = Vec::with_capacity(spec.epsilons.len() * spec.algos.len());
    for &eps in &spec.epsilons {
        for &algo in &spec.algos {
            let config = SolverConfig {
                beta: spec.beta,
                epsilon: eps,
                max_rounds,
                diverge_threshold: spec.diverge_threshold,
                init_seed,
                log_permutations: false,
            };
            let out = run_until(&inst, &config, algo);
            outcomes.push((out.status, out.iterations));
        }
    }
    let spectral_diverges = spec
        .spectral_check
        .then(|| spectral_classify_cyclic(&inst).unwrap_or(true));
    InstanceRecord {
        outcomes,
        spectral_diverges,
    }
}

fn aggregate_cell(
    spec: &ExperimentSpec,
    dist: Dist,
    n: usize,
    records: &[InstanceRecord],
) -> Vec<CellResult> {
    let max_rounds = spec
        .max_rounds
        .unwrap_or_else(|| SolverConfig::default_max_rounds(n));
    let spectral_div_frac = if spec.spectral_check {
        records
            .iter()
            .filter(|r| r.spectral_diverges == Some(true))
            .count() as f64
            / records.len() as f64
    } else {
        f64::NAN
    };

    let mut cells = Vec::new();
    for (ei, &eps) in spec.epsilons.iter().enumerate() {
        for (ai, &algo) in spec.algos.iter().enumerate() {
            let slot = ei * spec.algos.len() + ai;
            let (mut conv, mut div, mut stall, mut invalid) = (0usize, 0, 0, 0);
            let mut log_sum = 0.0f64;
            let mut log_count = 0usize;
            let mut capped = 0usize;
            for rec in records {
                let (status, iters) = rec.outcomes[slot];
                match status {
                    RunStatus::Converged => conv += 1,
                    RunStatus::Diverged => div += 1,
                    RunStatus::Stalled => stall += 1,
                    RunStatus::Invalid => invalid += 1,
                }
                if status == RunStatus::Invalid {
                    continue;
                }
                // cyclic: converged runs only; others: all runs, with
                // non-converged runs contributing max_rounds
                let contribution = match (algo, status) {
                    (Algo::Cyclic, RunStatus::Converged) => Some(iters),
                    (Algo::Cyclic, _) => None,
                    (_, RunStatus::Converged) => Some(iters),
                    (_, _) => {
                        capped += 1;
                        Some(max_rounds)
                    }
                };
                if let Some(k) = contribution {
                    log_sum += (k.max(1) as f64).ln();
                    log_count += 1;
                }
            }
            let geomean = (log_count > 0).then(|| (log_sum / log_count as f64).exp());
            cells.push(CellResult {
                dist,
                n,
                algo,
                epsilon: eps,
                instances: records.len(),
                converged: conv,
                diverged: div,
                stalled: stall,
                invalid,
                geomean_iters: geomean,
                geomean_capped: capped,
                spectral_div_frac,
                master_seed: spec.master_seed,
            });
        }
    }
    cells
}

/// CSV with the fixed column set, one row per cell.
pub fn to_csv(results: &[CellResult]) -> String {
    let mut out = String::from(
        "dist,N,algo,epsilon,instances,converged,diverged,stalled,invalid,geomean_iters,spectral_div_frac,master_seed\n",
    );
    for r in results {
        let geomean = r
            .geomean_iters
            .map(|g| g.to_string())
            .unwrap_or_else(|| "N/A".to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.dist,
            r.n,
            r.algo,
            r.epsilon,
            r.instances,
            r.converged,
            r.diverged,
            r.stalled,
            r.invalid,
            geomean,
            r.spectral_div_frac,
            r.master_seed
        ));
    }
    out
}

/// Markdown table mirroring the benchmark layout: one row per (dist, N) with
/// the divergence ratio and per-epsilon geometric means by algorithm.
pub fn to_markdown(results: &[CellResult]) -> String {
    let mut keys: Vec<(Dist, usize)> = Vec::new();
    for r in results {
        if !keys.contains(&(r.dist, r.n)) {
            keys.push((r.dist, r.n));
        }
    }
    let mut eps_list: Vec<f64> = Vec::new();
    let mut algo_list: Vec<Algo> = Vec::new();
    for r in results {
        if !eps_list.contains(&r.epsilon) {
            eps_list.push(r.epsilon);
        }
        if !algo_list.contains(&r.algo) {
            algo_list.push(r.algo);
        }
    }

    let mut head = String::from("| dist | N | Diverg. Ratio |");
    let mut rule = String::from("|---|---|---|");
    for &eps in &eps_list {
        for &algo in &algo_list {
            head.push_str(&format!(" {algo} @ {eps} |"));
            rule.push_str("---|");
        }
    }
    let mut out = format!("{head}\n{rule}\n");

    for (dist, n) in keys {
        let cell = |eps: f64, algo: Algo| -> Option<&CellResult> {
            results
                .iter()
                .find(|r| r.dist == dist && r.n == n && r.epsilon == eps && r.algo == algo)
        };
        // divergence ratio from the cyclic rows when present, else the first
        // algorithm's
        let ratio_row = algo_list
            .iter()
            .find(|&&a| a == Algo::Cyclic)
            .or(algo_list.first())
            .and_then(|&a| cell(eps_list[0], a));
        let ratio = ratio_row
            .map(|r| format!("{:.1}%", 100.0 * r.divergence_fraction()))
            .unwrap_or_else(|| "-".into());
        let mut row = format!("| {dist} | {n} | {ratio} |");
        for &eps in &eps_list {
            for &algo in &algo_list {
                let text = match cell(eps, algo) {
                    Some(r) => match r.geomean_iters {
                        Some(g) => {
                            let star = if r.geomean_capped > 0 { "*" } else { "" };
                            format!("{g:.3e}{star}")
                        }
                        None => "N/A".into(),
                    },
                    None => "-".into(),
                };
                row.push_str(&format!(" {text} |"));
            }
        }
        out.push_str(&row);
        out.push('\n');
    }
    out.push_str("\n`*` = geometric mean includes non-converged runs counted at the round cap.\n");
    out
}

/// Geometric mean helper: `exp(mean ln k)`, `None` on an empty set.
pub fn geometric_mean(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let s: f64 = values.iter().map(|&v| (v.max(1) as f64).ln()).sum();
    Some((s / values.len() as f64).exp())
}
