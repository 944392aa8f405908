//! Iterative solvers: cyclic ADMM, randomly permuted ADMM, the two
//! independently randomized variants, and a gradient-descent baseline.
//!
//! One ADMM round is a Gauss–Seidel sweep over the primal blocks in some
//! order followed by one dual step `mu <- mu - beta (A x - b)`. The block
//! update solves the first-order condition
//!
//! ```text
//! A_i^T A_i  x_i = A_i^T ( mu / beta + b - sum_{j != i} A_j x_j )
//! ```
//!
//! using each block's freshest value. The variants differ only in how the
//! update order is drawn each round:
//!
//! * cyclic — fixed order `1..n`;
//! * rp — a fresh uniform permutation (every block exactly once);
//! * p_radmm — `n` independent uniform draws with replacement, then the
//!   dual step;
//! * pd_radmm — the dual variable joins the draw as block `n+1`; one draw
//!   per step, `n+1` steps counted as one round.
//!
//! The gradient baseline runs `x <- x - alpha A^T (A x - b)` with the
//! constant stepsize `alpha = 1 / lambda_max(A^T A)`.

use crate::densenum::{max_eig_sym, LuFactors, Matrix, NumError};
use crate::model::{gram, sample_permutation, Permutation, ProblemInstance};
use crate::rng::{derive_seed, Rng};

/// Primal/dual state; `y = [x; mu]` stacks to a `2N` vector.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Matrix,
    pub mu: Matrix,
    pub round: u64,
}

impl SolverState {
    pub fn new(x: Matrix, mu: Matrix) -> Self {
        assert_eq!(x.cols(), 1);
        assert_eq!(mu.cols(), 1);
        assert_eq!(x.rows(), mu.rows());
        SolverState { x, mu, round: 0 }
    }

    /// Draw `x`, `mu` i.i.d. standard normal (the shared random start of a
    /// benchmark comparison).
    pub fn random(n: usize, rng: &mut Rng) -> Self {
        let x = Matrix::from_fn(n, 1, |_, _| rng.next_normal());
        let mu = Matrix::from_fn(n, 1, |_, _| rng.next_normal());
        SolverState::new(x, mu)
    }

    /// The stacked iterate `[x; mu]`.
    pub fn stacked(&self) -> Matrix {
        let n = self.x.rows();
        let mut y = Matrix::zeros(2 * n, 1);
        y.set_block(0, 0, &self.x);
        y.set_block(n, 0, &self.mu);
        y
    }

    pub fn from_stacked(y: &Matrix) -> Self {
        let n2 = y.rows();
        assert!(n2.is_multiple_of(2) && y.cols() == 1);
        let n = n2 / 2;
        SolverState::new(y.block(0, 0, n, 1), y.block(n, 0, n, 1))
    }
}

/// Run parameters. `epsilon` is the relative-error target
/// `|A x^k - b| / |A x^0 - b| < epsilon`; a run is declared diverged once the
/// relative error reaches `diverge_threshold` or any iterate entry goes
/// non-finite, and stalled when `max_rounds` pass without either verdict.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub max_rounds: u64,
    pub diverge_threshold: f64,
    pub init_seed: u64,
    /// Record the drawn permutation of every round in the outcome.
    pub log_permutations: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64, init_seed: u64) -> Self {
        SolverConfig {
            beta: 1.0,
            epsilon,
            max_rounds: 1_000_000,
            diverge_threshold: 1e8,
            init_seed,
            log_permutations: false,
        }
    }

    /// Default round budget by dimension: 10^6 up to N = 10, 10^5 beyond.
    pub fn default_max_rounds(n: usize) -> u64 {
        if n <= 10 {
            1_000_000
        } else {
            100_000
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    Diverged,
    Stalled,
    /// A singular diagonal Gram block made the sweep undefined.
    Invalid,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunStatus::Converged => "Converged",
            RunStatus::Diverged => "Diverged",
            RunStatus::Stalled => "Stalled",
            RunStatus::Invalid => "Invalid",
        };
        write!(f, "{s}")
    }
}

/// Classification of one run. `iterations` counts rounds (gradient steps for
/// GD; `n+1` draws per round for pd_radmm).
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub iterations: u64,
    pub final_rel_error: f64,
    pub permutation_log: Option<Vec<Permutation>>,
}

/// The algorithms under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Cyclic,
    Rp,
    PRadmm,
    PdRadmm,
    Gd,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::Cyclic,
        Algo::Rp,
        Algo::PRadmm,
        Algo::PdRadmm,
        Algo::Gd,
    ];
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algo::Cyclic => "cyclic",
            Algo::Rp => "rp",
            Algo::PRadmm => "p_radmm",
            Algo::PdRadmm => "pd_radmm",
            Algo::Gd => "gd",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cyclic" => Ok(Algo::Cyclic),
            "rp" => Ok(Algo::Rp),
            "p_radmm" => Ok(Algo::PRadmm),
            "pd_radmm" => Ok(Algo::PdRadmm),
            "gd" => Ok(Algo::Gd),
            other => Err(format!(
                "unknown algorithm '{other}' (expected cyclic, rp, p_radmm, pd_radmm, gd)"
            )),
        }
    }
}

/// Sweep engine for one instance: the diagonal Gram blocks `A_i^T A_i` are
/// factorized once and reused across rounds, so a round costs `O(N^2)`.
pub struct Sweeper<'a> {
    inst: &'a ProblemInstance,
    beta: f64,
    block_lu: Vec<LuFactors>,
}

impl<'a> Sweeper<'a> {
    /// Factorizes every diagonal Gram block; a singular block (rank-deficient
    /// `A_i`) surfaces here as `SingularMatrix`.
    pub fn new(inst: &'a ProblemInstance, beta: f64) -> Result<Self, NumError> {
        assert!(beta > 0.0, "beta must be positive");
        let g = gram(inst);
        let mut block_lu = Vec::with_capacity(inst.n_blocks());
        for i in 0..inst.n_blocks() {
            let off = inst.partition.offset(i);
            let d = inst.partition.size(i);
            block_lu.push(LuFactors::factor(&g.block(off, off, d, d))?);
        }
        Ok(Sweeper {
            inst,
            beta,
            block_lu,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    /// Update block `i` in place given `v = mu/beta + b` and the maintained
    /// product `s = A x`, keeping `s` consistent.
    fn update_block(&self, state: &mut SolverState, s: &mut Matrix, v: &Matrix, i: usize) {
        let off = self.inst.partition.offset(i);
        let d = self.inst.partition.size(i);
        let n = self.inst.dim();
        let a = &self.inst.a;

        // rhs = A_i^T (v - s); with s including the current x_i this yields
        // the increment form x_i += (A_i^T A_i)^{-1} A_i^T (v - s).
        let mut rhs = Matrix::zeros(d, 1);
        for c in 0..d {
            let mut acc = 0.0;
            for r in 0..n {
                acc += a[(r, off + c)] * (v[(r, 0)] - s[(r, 0)]);
            }
            rhs[(c, 0)] = acc;
        }
        let delta = self.block_lu[i].solve(&rhs);
        for c in 0..d {
            state.x[(off + c, 0)] += delta[(c, 0)];
        }
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..d {
                acc += a[(r, off + c)] * delta[(c, 0)];
            }
            s[(r, 0)] += acc;
        }
    }

    /// One-shot form of the primal block update (recomputes `A x`).
    pub fn primal_block_update(&self, state: &mut SolverState, i: usize) {
        let mut s = self.inst.a.matmul(&state.x);
        let v = state.mu.scale(1.0 / self.beta).add(&self.inst.b);
        self.update_block(state, &mut s, &v, i);
    }

    /// `mu <- mu - beta (A x - b)` with the current `x`.
    pub fn dual_update(&self, state: &mut SolverState) {
        let s = self.inst.a.matmul(&state.x);
        self.apply_dual(state, &s);
    }

    fn apply_dual(&self, state: &mut SolverState, s: &Matrix) {
        let n = self.inst.dim();
        for r in 0..n {
            state.mu[(r, 0)] -= self.beta * (s[(r, 0)] - self.inst.b[(r, 0)]);
        }
    }

    /// One full round in the given order: primal sweep, then the dual step.
    /// Returns `A x` as of the end of the sweep.
    pub fn round_with_order(&self, state: &mut SolverState, order: &Permutation) -> Matrix {
        assert_eq!(order.len(), self.inst.n_blocks());
        let v = state.mu.scale(1.0 / self.beta).add(&self.inst.b);
        let mut s = self.inst.a.matmul(&state.x);
        for &i in order.order() {
            self.update_block(state, &mut s, &v, i);
        }
        self.apply_dual(state, &s);
        state.round += 1;
        s
    }

    /// Fixed-order round (the cyclic rule).
    pub fn cyclic_round(&self, state: &mut SolverState) -> Matrix {
        self.round_with_order(state, &Permutation::identity(self.inst.n_blocks()))
    }

    /// Randomly permuted round; returns the drawn order for logging.
    pub fn rp_round(&self, state: &mut SolverState, rng: &mut Rng) -> (Matrix, Permutation) {
        let sigma = sample_permutation(self.inst.n_blocks(), rng);
        let s = self.round_with_order(state, &sigma);
        (s, sigma)
    }

    /// One round of n independent uniform block draws (with replacement),
    /// then the dual step. Returns `A x` post-sweep and the drawn indices.
    pub fn p_radmm_round(&self, state: &mut SolverState, rng: &mut Rng) -> (Matrix, Vec<usize>) {
        let n_blocks = self.inst.n_blocks();
        let v = state.mu.scale(1.0 / self.beta).add(&self.inst.b);
        let mut s = self.inst.a.matmul(&state.x);
        let mut draws = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            let i = rng.below(n_blocks as u64) as usize;
            draws.push(i);
            self.update_block(state, &mut s, &v, i);
        }
        self.apply_dual(state, &s);
        state.round += 1;
        (s, draws)
    }

    /// One primal-dual draw: index `i < n` updates block `i`; `i = n` runs
    /// the dual step. All other variables carry over. Returns the draw.
    pub fn pd_radmm_step(&self, state: &mut SolverState, s: &mut Matrix, rng: &mut Rng) -> usize {
        let n_blocks = self.inst.n_blocks();
        let i = rng.below(n_blocks as u64 + 1) as usize;
        if i < n_blocks {
            let v = state.mu.scale(1.0 / self.beta).add(&self.inst.b);
            self.update_block(state, s, &v, i);
        } else {
            self.apply_dual(state, s);
        }
        i
    }
}

/// One gradient step on `|A x - b|^2 / 2`: `x <- x - alpha A^T (A x - b)`.
pub fn gd_step(inst: &ProblemInstance, x: &mut Matrix, alpha: f64) {
    assert!(alpha > 0.0);
    let n = inst.dim();
    let mut r = inst.a.matmul(x);
    for i in 0..n {
        r[(i, 0)] -= inst.b[(i, 0)];
    }
    let g = inst.a.transpose().matmul(&r);
    for i in 0..n {
        x[(i, 0)] -= alpha * g[(i, 0)];
    }
}

fn rel_error(s: &Matrix, b: &Matrix, r0: f64) -> f64 {
    let n = s.rows();
    let mut acc = 0.0;
    for i in 0..n {
        let d = s[(i, 0)] - b[(i, 0)];
        acc += d * d;
    }
    acc.sqrt() / r0
}

/// Run `algo` from a fresh random start drawn from `config.init_seed`.
///
/// The start `y^0 = [x^0; mu^0]` has i.i.d. standard normal entries; all
/// algorithms given the same `init_seed` share the same `y^0` (GD starts from
/// its `x^0`), while the algorithm's own draws come from a separate stream
/// derived from the same seed.
pub fn run_until(inst: &ProblemInstance, config: &SolverConfig, algo: Algo) -> RunOutcome {
    let mut init_rng = Rng::seed_from(derive_seed(config.init_seed, &[0]));
    let state = SolverState::random(inst.dim(), &mut init_rng);
    run_with_state(inst, config, algo, state)
}

/// Run `algo` from an explicit starting state. The algorithm's random draws
/// are derived from `config.init_seed` regardless of the state's origin.
pub fn run_with_state(
    inst: &ProblemInstance,
    config: &SolverConfig,
    algo: Algo,
    mut state: SolverState,
) -> RunOutcome {
    let mut algo_rng = Rng::seed_from(derive_seed(config.init_seed, &[1]));
    let n_blocks = inst.n_blocks();

    let r0 = inst.a.matmul(&state.x).sub(&inst.b).norm2();
    if r0 == 0.0 {
        return RunOutcome {
            status: RunStatus::Converged,
            iterations: 0,
            final_rel_error: 0.0,
            permutation_log: config.log_permutations.then(Vec::new),
        };
    }

    let mut log = config.log_permutations.then(Vec::new);

    if algo == Algo::Gd {
        let alpha = match max_eig_sym(&gram(inst)) {
            Ok(l) if l > 0.0 => 1.0 / l,
            _ => {
                return RunOutcome {
                    status: RunStatus::Invalid,
                    iterations: 0,
                    final_rel_error: f64::NAN,
                    permutation_log: log,
                }
            }
        };
        let mut x = state.x.clone();
        let at = inst.a.transpose();
        let mut r = inst.a.matmul(&x).sub(&inst.b);
        let mut rel = f64::NAN;
        for k in 1..=config.max_rounds {
            // x <- x - alpha A^T r, then refresh the residual
            let g = at.matmul(&r);
            for i in 0..inst.dim() {
                x[(i, 0)] -= alpha * g[(i, 0)];
            }
            r = inst.a.matmul(&x).sub(&inst.b);
            rel = r.norm2() / r0;
            if let Some(status) = classify(rel, config, &x) {
                return RunOutcome {
                    status,
                    iterations: k,
                    final_rel_error: rel,
                    permutation_log: log,
                };
            }
        }
        return RunOutcome {
            status: RunStatus::Stalled,
            iterations: config.max_rounds,
            final_rel_error: rel,
            permutation_log: log,
        };
    }

    let sweeper = match Sweeper::new(inst, config.beta) {
        Ok(s) => s,
        Err(_) => {
            return RunOutcome {
                status: RunStatus::Invalid,
                iterations: 0,
                final_rel_error: f64::NAN,
                permutation_log: log,
            }
        }
    };

    let mut last_rel = f64::NAN;
    for k in 1..=config.max_rounds {
        let s = match algo {
            Algo::Cyclic => {
                let s = sweeper.cyclic_round(&mut state);
                if let Some(l) = log.as_mut() {
                    l.push(Permutation::identity(n_blocks));
                }
                s
            }
            Algo::Rp => {
                let (s, sigma) = sweeper.rp_round(&mut state, &mut algo_rng);
                if let Some(l) = log.as_mut() {
                    l.push(sigma);
                }
                s
            }
            Algo::PRadmm => sweeper.p_radmm_round(&mut state, &mut algo_rng).0,
            Algo::PdRadmm => {
                // one round = n + 1 draws, for comparability
                let mut s = inst.a.matmul(&state.x);
                for _ in 0..=n_blocks {
                    sweeper.pd_radmm_step(&mut state, &mut s, &mut algo_rng);
                }
                state.round += 1;
                s
            }
            Algo::Gd => unreachable!(),
        };
        let rel = rel_error(&s, &inst.b, r0);
        last_rel = rel;
        if let Some(status) = classify(rel, config, &state.x) {
            return RunOutcome {
                status,
                iterations: k,
                final_rel_error: rel,
                permutation_log: log,
            };
        }
    }
    RunOutcome {
        status: RunStatus::Stalled,
        iterations: config.max_rounds,
        final_rel_error: last_rel,
        permutation_log: log,
    }
}

fn classify(rel: f64, config: &SolverConfig, x: &Matrix) -> Option<RunStatus> {
    if !rel.is_finite() || !x.is_finite() {
        return Some(RunStatus::Diverged);
    }
    if rel >= config.diverge_threshold {
        return Some(RunStatus::Diverged);
    }
    if rel < config.epsilon {
        return Some(RunStatus::Converged);
    }
    None
}

/// Componentwise mean and variance of the stacked iterate `y^k` over
/// independent randomly permuted runs, recorded at every round `k <= horizon`.
#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    /// `mean[k]` is the `2N x 1` empirical mean of `y^k`.
    pub mean: Vec<Matrix>,
    /// `variance[k]` holds the componentwise sample variance of `y^k`.
    pub variance: Vec<Matrix>,
    pub runs: usize,
}

impl TrajectoryStats {
    /// Componentwise standard error of the mean at round `k`.
    pub fn std_error(&self, k: usize) -> Matrix {
        let v = &self.variance[k];
        Matrix::from_fn(v.rows(), 1, |i, _| (v[(i, 0)] / self.runs as f64).sqrt())
    }
}

/// Empirical mean trajectory of RP-ADMM over `runs` independent permutation
/// streams, all starting from the same `y^0` drawn from `config.init_seed`.
///
/// Per-run streams are derived from `(init_seed, run_index)`, so results do
/// not depend on execution order.
pub fn expected_trajectory(
    inst: &ProblemInstance,
    config: &SolverConfig,
    runs: usize,
    horizon: usize,
) -> Result<TrajectoryStats, NumError> {
    assert!(runs >= 1);
    let sweeper = Sweeper::new(inst, config.beta)?;
    let n2 = 2 * inst.dim();

    let mut init_rng = Rng::seed_from(derive_seed(config.init_seed, &[0]));
    let y0 = SolverState::random(inst.dim(), &mut init_rng);

    let mut sum = vec![Matrix::zeros(n2, 1); horizon + 1];
    let mut sum_sq = vec![Matrix::zeros(n2, 1); horizon + 1];

    for run in 0..runs {
        let mut rng = Rng::seed_from(derive_seed(config.init_seed, &[2, run as u64]));
        let mut state = y0.clone();
        for k in 0..=horizon {
            if k > 0 {
                sweeper.rp_round(&mut state, &mut rng);
            }
            let y = state.stacked();
            for i in 0..n2 {
                sum[k][(i, 0)] += y[(i, 0)];
                sum_sq[k][(i, 0)] += y[(i, 0)] * y[(i, 0)];
            }
        }
    }

    let r = runs as f64;
    let mean: Vec<Matrix> = sum.iter().map(|m| m.scale(1.0 / r)).collect();
    let variance: Vec<Matrix> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            Matrix::from_fn(n2, 1, |i, _| {
                let v = sq[(i, 0)] / r - m[(i, 0)] * m[(i, 0)];
                v.max(0.0)
            })
        })
        .collect();

    Ok(TrajectoryStats {
        mean,
        variance,
        runs,
    })
}
