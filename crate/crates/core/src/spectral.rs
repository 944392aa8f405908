//! Update matrices and spectral certification.
//!
//! For a block order `sigma`, one ADMM round is the affine map
//! `y -> Lbar_sigma^{-1} Rbar_sigma y + Lbar_sigma^{-1} bbar` on the stacked
//! iterate `y = [x; mu]`, where
//!
//! ```text
//! Lbar = [ L_sigma  0 ]    Rbar = [ R_sigma  A^T ]    bbar = [ A^T b ]
//!        [ A        I ]           [ 0        I   ]           [ b     ]
//! ```
//!
//! `L_sigma` keeps the Gram block `A_i^T A_j` wherever `j` does not come
//! after `i` in the sweep (the "reverse pairs" plus the diagonal), and
//! `R_sigma = L_sigma - A^T A`. Averaging the round map over all `n!` orders
//! gives the expected update matrix `M`, expressible through
//! `Q = E[L_sigma^{-1}]`.
//!
//! The module certifies, numerically, the spectral facts that make the
//! randomly permuted sweep converge in expectation:
//!
//! * the eigenvalue map `lambda <-> tau = (1-lambda)^2 / (1-2 lambda)`
//!   between `M` and the symmetric matrix `A Q A^T` ([`lemma1_check`],
//!   [`rho_from_taus`]);
//! * `eig(A Q A^T)` inside `(0, 4/3)`, hence `rho(M) < 1`
//!   ([`certify_lemma2`], [`tightness_search`]);
//! * the decomposition `Q = (1/n) sum_k S_k Q_k S_k^T` relating `Q` to its
//!   `(n-1)`-block analogs ([`induction_components`], [`prop1_reconstruct`]),
//!   and the bound `0 <= Theta_k = W_k^T Qhat_k W_k < 4/3 I`
//!   ([`theta_bound_check`]), both stated for unit diagonal Gram blocks and
//!   therefore evaluated after block normalization.

use crate::densenum::{
    general_eig, solve_linear, spectral_radius, sym_eig, sym_inv_sqrt, ComplexEigenvalue,
    LuFactors, Matrix, NumError,
};
use crate::model::{
    enumerate_permutations, enumerate_permutations_excluding, gram, BlockPartition, ModelError,
    Permutation, ProblemInstance,
};
use crate::rng::Rng;
use std::fmt;

/// Enumeration guard for expectation matrices (9! inversions).
pub const Q_ENUMERATION_LIMIT: usize = 9;
/// Enumeration guard for the induction decomposition (n * (n-1)! inversions
/// per reconstruction plus the full enumeration cross-check).
pub const INDUCTION_LIMIT: usize = 8;

#[derive(Debug)]
pub enum SpectralError {
    Num(NumError),
    Model(ModelError),
    /// `sigma` does not match the partition's block count.
    BadPermutation,
    /// The enumeration average failed its symmetry assertion.
    QAsymmetry {
        found: f64,
        limit: f64,
    },
    /// Two algebraic routes to the same matrix disagreed.
    CrossCheck {
        what: &'static str,
        error: f64,
    },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::Num(e) => write!(f, "{e}"),
            SpectralError::Model(e) => write!(f, "{e}"),
            SpectralError::BadPermutation => write!(f, "permutation does not match partition"),
            SpectralError::QAsymmetry { found, limit } => {
                write!(f, "Q asymmetry {found:e} exceeds {limit:e}")
            }
            SpectralError::CrossCheck { what, error } => {
                write!(
                    f,
                    "cross-check failed for {what}: routes differ by {error:e}"
                )
            }
        }
    }
}

impl std::error::Error for SpectralError {}

impl From<NumError> for SpectralError {
    fn from(e: NumError) -> Self {
        SpectralError::Num(e)
    }
}

impl From<ModelError> for SpectralError {
    fn from(e: ModelError) -> Self {
        SpectralError::Model(e)
    }
}

/// Round-map matrices for one order.
#[derive(Clone, Debug)]
pub struct UpdateMatrices {
    pub l_sigma: Matrix,
    pub r_sigma: Matrix,
    pub bar_l: Matrix,
    pub bar_r: Matrix,
    pub bar_b: Matrix,
    pub m_sigma: Matrix,
}

/// Expectation matrices `Q = E[L_sigma^{-1}]` and `M = E[M_sigma]`.
#[derive(Clone, Debug)]
pub struct ExpectedMatrices {
    pub q: Matrix,
    pub m: Matrix,
}

/// The pieces of the decomposition `Q = (1/n) sum_k S_k Q_k S_k^T`.
#[derive(Clone, Debug)]
pub struct InductionComponents {
    /// Block permutation moving block-column `k` to the end.
    pub s_k: Matrix,
    /// `k`-th Gram block-column without its diagonal block.
    pub w_k: Matrix,
    /// Expectation of reduced-system inverses over orderings of the other
    /// blocks.
    pub q_hat_k: Matrix,
    /// `[Qhat_k, -1/2 Qhat_k W_k; -1/2 W_k^T Qhat_k, I]`.
    pub q_k: Matrix,
}

/// Aggregate certification record for one instance.
#[derive(Clone, Debug)]
pub struct CertReport {
    /// Spectrum of `A Q A^T` (descending).
    pub taus: Vec<f64>,
    /// Spectral radius of `M` from the general eigensolver.
    pub rho_m: f64,
    /// Max bidirectional eigenvalue-map mismatch.
    pub lemma1_max_mismatch: f64,
    /// Max entry error of the induction reconstruction of `Q`.
    pub prop1_max_entry_error: f64,
    /// `(lambda_min, lambda_max)` of `Theta_k` for each block `k`.
    pub theta_bounds: Vec<(f64, f64)>,
}

fn diag_block_lus(g: &Matrix, partition: &BlockPartition) -> Result<Vec<LuFactors>, NumError> {
    (0..partition.n())
        .map(|i| {
            let off = partition.offset(i);
            let d = partition.size(i);
            LuFactors::factor(&g.block(off, off, d, d))
        })
        .collect()
}

/// `L_sigma` and `R_sigma = L_sigma - gram` for a block order.
///
/// `L_sigma[i, j]` is the Gram block exactly when `j` is at or before `i` in
/// the sweep (`sigma^{-1}(j) <= sigma^{-1}(i)`).
pub fn build_l_sigma(
    g: &Matrix,
    partition: &BlockPartition,
    sigma: &Permutation,
) -> Result<(Matrix, Matrix), SpectralError> {
    if sigma.len() != partition.n() || g.rows() != partition.total() || !g.is_square() {
        return Err(SpectralError::BadPermutation);
    }
    let n = partition.n();
    let total = partition.total();
    let mut l = Matrix::zeros(total, total);
    for bi in 0..n {
        for bj in 0..n {
            if sigma.position(bj) <= sigma.position(bi) {
                let (ri, ci) = (partition.offset(bi), partition.offset(bj));
                for r in 0..partition.size(bi) {
                    for c in 0..partition.size(bj) {
                        l[(ri + r, ci + c)] = g[(ri + r, ci + c)];
                    }
                }
            }
        }
    }
    let r = l.sub(g);
    Ok((l, r))
}

/// `L_sigma^{-1}` by block forward substitution in sweep order, using one
/// `d_k x d_k` solve per block. Source blocks are read from `l`; the routine
/// works equally with the full Gram matrix since it only reads the
/// sigma-lower pattern.
fn block_forward_inverse(
    l: &Matrix,
    partition: &BlockPartition,
    order: &[usize],
    diag_lu: &[LuFactors],
) -> Matrix {
    let total = partition.total();
    let mut x = Matrix::zeros(total, total);
    for (t, &bi) in order.iter().enumerate() {
        let off_i = partition.offset(bi);
        let d_i = partition.size(bi);
        // rhs = E_i rows - sum over already-solved blocks of L[i, j] X[j, :]
        let mut rhs = Matrix::zeros(d_i, total);
        for r in 0..d_i {
            rhs[(r, off_i + r)] = 1.0;
        }
        for &bj in &order[..t] {
            let off_j = partition.offset(bj);
            let d_j = partition.size(bj);
            for r in 0..d_i {
                for k in 0..d_j {
                    let lv = l[(off_i + r, off_j + k)];
                    if lv == 0.0 {
                        continue;
                    }
                    for c in 0..total {
                        rhs[(r, c)] -= lv * x[(off_j + k, c)];
                    }
                }
            }
        }
        let sol = diag_lu[bi].solve(&rhs);
        x.set_block(off_i, 0, &sol);
    }
    x
}

/// Invert `L_sigma` exploiting its order structure. Agrees with the dense
/// inverse to `1e-10` on well-conditioned input (tested, not enforced).
pub fn invert_l_sigma(
    l: &Matrix,
    partition: &BlockPartition,
    sigma: &Permutation,
) -> Result<Matrix, SpectralError> {
    if sigma.len() != partition.n() || l.rows() != partition.total() || !l.is_square() {
        return Err(SpectralError::BadPermutation);
    }
    let diag = diag_block_lus(l, partition)?;
    Ok(block_forward_inverse(l, partition, sigma.order(), &diag))
}

fn closed_form_m(l_inv_or_q: &Matrix, a: &Matrix, g: &Matrix) -> Matrix {
    // [ I - Q G      Q A^T     ]
    // [ -A + A Q G   I - A Q A^T ]
    let n = a.rows();
    let at = a.transpose();
    let qg = l_inv_or_q.matmul(g);
    let qat = l_inv_or_q.matmul(&at);
    let aqg = a.matmul(&qg);
    let aqat = a.matmul(&qat);
    let id = Matrix::identity(n);

    let mut m = Matrix::zeros(2 * n, 2 * n);
    m.set_block(0, 0, &id.sub(&qg));
    m.set_block(0, n, &qat);
    m.set_block(n, 0, &aqg.sub(a));
    m.set_block(n, n, &id.sub(&aqat));
    m
}

fn assemble_bar(l: &Matrix, r: &Matrix, a: &Matrix, b: &Matrix) -> (Matrix, Matrix, Matrix) {
    let n = a.rows();
    let id = Matrix::identity(n);
    let mut bar_l = Matrix::zeros(2 * n, 2 * n);
    bar_l.set_block(0, 0, l);
    bar_l.set_block(n, 0, a);
    bar_l.set_block(n, n, &id);
    let mut bar_r = Matrix::zeros(2 * n, 2 * n);
    bar_r.set_block(0, 0, r);
    bar_r.set_block(0, n, &a.transpose());
    bar_r.set_block(n, n, &id);
    let mut bar_b = Matrix::zeros(2 * n, 1);
    bar_b.set_block(0, 0, &a.transpose().matmul(b));
    bar_b.set_block(n, 0, b);
    (bar_l, bar_r, bar_b)
}

/// Assemble the full round-map matrices for one order.
///
/// `m_sigma` is computed both as the dense solve `Lbar^{-1} Rbar` and through
/// the closed form in `L_sigma^{-1}`; the two routes must agree to `1e-9`.
pub fn build_augmented(
    inst: &ProblemInstance,
    sigma: &Permutation,
) -> Result<UpdateMatrices, SpectralError> {
    let g = gram(inst);
    let (l_sigma, r_sigma) = build_l_sigma(&g, &inst.partition, sigma)?;
    let (bar_l, bar_r, bar_b) = assemble_bar(&l_sigma, &r_sigma, &inst.a, &inst.b);

    let m_dense = solve_linear(&bar_l, &bar_r)?;
    let l_inv = invert_l_sigma(&l_sigma, &inst.partition, sigma)?;
    let m_closed = closed_form_m(&l_inv, &inst.a, &g);
    let err = m_dense.max_diff(&m_closed);
    if err > 1e-9 {
        return Err(SpectralError::CrossCheck {
            what: "M_sigma (dense vs closed form)",
            error: err,
        });
    }

    Ok(UpdateMatrices {
        l_sigma,
        r_sigma,
        bar_l,
        bar_r,
        bar_b,
        m_sigma: m_dense,
    })
}

/// `Q = E[L_sigma^{-1}]`: the exact average over all `n!` orders.
///
/// The raw average must be symmetric to `1e-10` (it is, mathematically); the
/// returned matrix is the symmetrized `(Q + Q^T)/2`.
pub fn q_matrix(inst: &ProblemInstance) -> Result<Matrix, SpectralError> {
    q_of_gram(&gram(inst), &inst.partition)
}

/// `Q` from an explicit Gram matrix; see [`q_matrix`].
pub fn q_of_gram(g: &Matrix, partition: &BlockPartition) -> Result<Matrix, SpectralError> {
    let n = partition.n();
    if n > Q_ENUMERATION_LIMIT {
        return Err(SpectralError::Model(ModelError::SizeLimit {
            n,
            max: Q_ENUMERATION_LIMIT,
        }));
    }
    let diag = diag_block_lus(g, partition)?;
    let total = partition.total();
    let mut acc = Matrix::zeros(total, total);
    let perms = enumerate_permutations(n)?;
    for sigma in &perms {
        let inv = block_forward_inverse(g, partition, sigma.order(), &diag);
        acc = acc.add(&inv);
    }
    let q_raw = acc.scale(1.0 / perms.len() as f64);
    let asym = q_raw.asymmetry();
    if asym > 1e-10 {
        return Err(SpectralError::QAsymmetry {
            found: asym,
            limit: 1e-10,
        });
    }
    Ok(Matrix::from_fn(total, total, |i, j| {
        0.5 * (q_raw[(i, j)] + q_raw[(j, i)])
    }))
}

/// Expected update matrix `M` built from `Q` via the closed form, with an
/// independent cross-check against the direct average of the dense round
/// maps `Lbar_sigma^{-1} Rbar_sigma`.
pub fn m_matrix(inst: &ProblemInstance) -> Result<ExpectedMatrices, SpectralError> {
    let g = gram(inst);
    let q = q_of_gram(&g, &inst.partition)?;
    let m = closed_form_m(&q, &inst.a, &g);

    // Independent route: dense LU solves per order, averaged.
    let n2 = 2 * inst.dim();
    let mut acc = Matrix::zeros(n2, n2);
    let perms = enumerate_permutations(inst.n_blocks())?;
    for sigma in &perms {
        let (l_sigma, r_sigma) = build_l_sigma(&g, &inst.partition, sigma)?;
        let (bar_l, bar_r, _) = assemble_bar(&l_sigma, &r_sigma, &inst.a, &inst.b);
        acc = acc.add(&solve_linear(&bar_l, &bar_r)?);
    }
    let m_avg = acc.scale(1.0 / perms.len() as f64);
    let err = m.max_diff(&m_avg);
    if err > 1e-9 {
        return Err(SpectralError::CrossCheck {
            what: "M (closed form vs averaged round maps)",
            error: err,
        });
    }

    Ok(ExpectedMatrices { q, m })
}

/// Spectral radius via the general eigensolver.
pub fn rho(m: &Matrix) -> Result<f64, SpectralError> {
    Ok(spectral_radius(&general_eig(m)?))
}

/// Spectrum of `A Q A^T` by the symmetric route (equal to `eig(Q A^T A)` for
/// nonsingular `A`), descending.
pub fn tau_spectrum(inst: &ProblemInstance, q: &Matrix) -> Result<Vec<f64>, SpectralError> {
    let aqat = inst.a.matmul(q).matmul(&inst.a.transpose());
    // symmetrize roundoff before the symmetric eigensolver
    let n = aqat.rows();
    let sym = Matrix::from_fn(n, n, |i, j| 0.5 * (aqat[(i, j)] + aqat[(j, i)]));
    let (eigs, _) = sym_eig(&sym)?;
    Ok(eigs)
}

fn complex_div(ar: f64, ai: f64, br: f64, bi: f64) -> (f64, f64) {
    let d = br * br + bi * bi;
    ((ar * br + ai * bi) / d, (ai * br - ar * bi) / d)
}

/// The eigenvalue map `lambda -> (1 - lambda)^2 / (1 - 2 lambda)`.
pub fn lambda_to_tau(lambda: ComplexEigenvalue) -> ComplexEigenvalue {
    let (ur, ui) = (1.0 - lambda.re, -lambda.im);
    let (nr, ni) = (ur * ur - ui * ui, 2.0 * ur * ui);
    let (dr, di) = (1.0 - 2.0 * lambda.re, -2.0 * lambda.im);
    let (re, im) = complex_div(nr, ni, dr, di);
    ComplexEigenvalue { re, im }
}

/// The two roots `lambda = 1 - tau +- sqrt(tau (tau - 1))` of the inverse
/// map, as a real-coefficient quadratic: complex conjugates when
/// `0 < tau < 1`.
pub fn tau_to_lambdas(tau: f64) -> [ComplexEigenvalue; 2] {
    let disc = tau * (tau - 1.0);
    if disc >= 0.0 {
        let s = disc.sqrt();
        [
            ComplexEigenvalue::real(1.0 - tau + s),
            ComplexEigenvalue::real(1.0 - tau - s),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            ComplexEigenvalue {
                re: 1.0 - tau,
                im: s,
            },
            ComplexEigenvalue {
                re: 1.0 - tau,
                im: -s,
            },
        ]
    }
}

/// Bidirectional mismatch between `eig(M)` and the `tau` spectrum.
#[derive(Clone, Debug)]
pub struct Lemma1Report {
    /// Max over `lambda in eig(M)` of the distance from
    /// `(1-lambda)^2/(1-2 lambda)` to the nearest `tau`.
    pub forward_max: f64,
    /// Max over the roots of every `tau` of the distance to the nearest
    /// eigenvalue of `M`.
    pub backward_max: f64,
}

impl Lemma1Report {
    pub fn max_mismatch(&self) -> f64 {
        self.forward_max.max(self.backward_max)
    }
}

/// Check the eigenvalue map both ways. Eigenvalues of `M` within `1e-12` of
/// `1/2` are skipped in the forward direction (the map is undefined there;
/// such eigenvalues cannot occur in exact arithmetic). Mismatch is data, not
/// an error.
pub fn lemma1_check(m: &Matrix, taus: &[f64]) -> Result<Lemma1Report, SpectralError> {
    let eig_m = general_eig(m)?;

    let mut forward_max = 0.0f64;
    for &lam in &eig_m {
        if (1.0 - 2.0 * lam.re).abs() < 1e-12 && lam.im.abs() < 1e-12 {
            continue;
        }
        let tau = lambda_to_tau(lam);
        let d = taus
            .iter()
            .map(|&t| tau.dist(&ComplexEigenvalue::real(t)))
            .fold(f64::INFINITY, f64::min);
        forward_max = forward_max.max(d);
    }

    let mut backward_max = 0.0f64;
    for &t in taus {
        for root in tau_to_lambdas(t) {
            let d = eig_m
                .iter()
                .map(|e| e.dist(&root))
                .fold(f64::INFINITY, f64::min);
            backward_max = backward_max.max(d);
        }
    }

    Ok(Lemma1Report {
        forward_max,
        backward_max,
    })
}

/// `rho(M)` from the `tau` spectrum alone, by the case analysis of the root
/// moduli: `tau <= 0` contributes at least 1 (exactly 1 at `tau = 0`),
/// `0 < tau < 1` contributes `sqrt(1 - tau)`, `tau >= 1` contributes
/// `tau - 1 + sqrt(tau (tau - 1))`.
pub fn rho_from_taus(taus: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &t in taus {
        let m = if t < 0.0 {
            1.0 + t.abs() + (t.abs() * (t.abs() + 1.0)).sqrt()
        } else if t == 0.0 {
            1.0
        } else if t < 1.0 {
            (1.0 - t).sqrt()
        } else {
            t - 1.0 + (t * (t - 1.0)).sqrt()
        };
        best = best.max(m);
    }
    best
}

/// Containment report for `eig(A Q A^T) subset (0, 4/3)`.
#[derive(Clone, Debug)]
pub struct Lemma2Report {
    pub taus: Vec<f64>,
    pub min_tau: f64,
    pub max_tau: f64,
}

impl Lemma2Report {
    pub fn in_bounds(&self) -> bool {
        self.min_tau > 0.0 && self.max_tau < 4.0 / 3.0
    }

    /// `(min_tau - 0, 4/3 - max_tau)`; positive margins mean containment.
    pub fn margins(&self) -> (f64, f64) {
        (self.min_tau, 4.0 / 3.0 - self.max_tau)
    }
}

/// Compute the `tau` spectrum and its distance to the `(0, 4/3)` bounds.
pub fn certify_lemma2(inst: &ProblemInstance) -> Result<Lemma2Report, SpectralError> {
    let q = q_matrix(inst)?;
    let taus = tau_spectrum(inst, &q)?;
    let min_tau = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_tau = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Lemma2Report {
        taus,
        min_tau,
        max_tau,
    })
}

/// Replace each block by `A_i (A_i^T A_i)^{-1/2}` so every diagonal Gram
/// block becomes the identity. Returns the normalized instance and the
/// `2N x 2N` similarity `D = Diag((A_1^T A_1)^{-1/2}, ..., I_N)` with
/// `M(A) = D^{-1} M(normalized) D`.
pub fn normalize_blocks(
    inst: &ProblemInstance,
) -> Result<(ProblemInstance, Matrix), SpectralError> {
    let n = inst.dim();
    let g = gram(inst);
    let mut a_norm = inst.a.clone();
    let mut d = Matrix::identity(2 * n);
    for i in 0..inst.n_blocks() {
        let off = inst.partition.offset(i);
        let di = inst.partition.size(i);
        let gi = g.block(off, off, di, di);
        let s = sym_inv_sqrt(&gi)?;
        let cols = inst.block_cols(i).matmul(&s);
        a_norm.set_block(0, off, &cols);
        d.set_block(off, off, &s);
    }
    let normalized = ProblemInstance::new(a_norm, inst.b.clone(), inst.partition.clone())
        .map_err(SpectralError::Model)?;
    Ok((normalized, d))
}

/// Block permutation `S_k`: right multiplication by `S_k` moves block-column
/// `k` to the end; `S_k^T = S_k^{-1}` and `S_n = I`.
pub fn s_k_matrix(partition: &BlockPartition, k: usize) -> Matrix {
    let n = partition.n();
    let total = partition.total();
    assert!(k < n);
    let mut s = Matrix::zeros(total, total);
    let mut col = 0;
    for blk in (0..n).filter(|&b| b != k).chain(std::iter::once(k)) {
        let off = partition.offset(blk);
        for c in 0..partition.size(blk) {
            s[(off + c, col + c)] = 1.0;
        }
        col += partition.size(blk);
    }
    s
}

/// The `S_k`, `W_k`, `Qhat_k`, `Q_k` of the decomposition for one block `k`,
/// built from the instance's Gram matrix as given. The assembled `Q_k`
/// carries an identity lower-right block, so the decomposition identity
/// holds when the instance has unit diagonal Gram blocks.
pub fn induction_components(
    inst: &ProblemInstance,
    k: usize,
) -> Result<InductionComponents, SpectralError> {
    let n = inst.n_blocks();
    assert!(k < n);
    if n > INDUCTION_LIMIT {
        return Err(SpectralError::Model(ModelError::SizeLimit {
            n,
            max: INDUCTION_LIMIT,
        }));
    }
    let g = gram(inst);
    let partition = &inst.partition;
    let total = partition.total();
    let d_k = partition.size(k);
    let off_k = partition.offset(k);

    let s_k = s_k_matrix(partition, k);

    // Reduced system: remove block k from the Gram matrix.
    let rest: Vec<usize> = (0..n).filter(|&b| b != k).collect();
    let reduced = partition.without(k);
    let m = total - d_k;
    let mut g_hat = Matrix::zeros(m, m);
    let mut w_k = Matrix::zeros(m, d_k);
    {
        let mut ri = 0;
        for &bi in &rest {
            let (oi, di) = (partition.offset(bi), partition.size(bi));
            let mut ci = 0;
            for &bj in &rest {
                let (oj, dj) = (partition.offset(bj), partition.size(bj));
                for r in 0..di {
                    for c in 0..dj {
                        g_hat[(ri + r, ci + c)] = g[(oi + r, oj + c)];
                    }
                }
                ci += dj;
            }
            for r in 0..di {
                for c in 0..d_k {
                    w_k[(ri + r, c)] = g[(oi + r, off_k + c)];
                }
            }
            ri += di;
        }
    }

    // Qhat_k: average of reduced inverses over all orderings of the other
    // blocks, with original block labels mapped to reduced positions.
    let diag = diag_block_lus(&g_hat, &reduced)?;
    let mut acc = Matrix::zeros(m, m);
    let orderings = enumerate_permutations_excluding(n, k)?;
    for seq in &orderings {
        let order: Vec<usize> = seq.iter().map(|&e| if e > k { e - 1 } else { e }).collect();
        acc = acc.add(&block_forward_inverse(&g_hat, &reduced, &order, &diag));
    }
    let q_hat_k = acc.scale(1.0 / orderings.len() as f64);

    // Q_k = [Qhat, -1/2 Qhat W; -1/2 W^T Qhat, I_{d_k}]
    let qw = q_hat_k.matmul(&w_k).scale(-0.5);
    let mut q_k = Matrix::zeros(total, total);
    q_k.set_block(0, 0, &q_hat_k);
    q_k.set_block(0, m, &qw);
    q_k.set_block(m, 0, &qw.transpose());
    q_k.set_block(m, m, &Matrix::identity(d_k));

    Ok(InductionComponents {
        s_k,
        w_k,
        q_hat_k,
        q_k,
    })
}

/// Result of reconstructing `Q` through the decomposition.
#[derive(Clone, Debug)]
pub struct Prop1Report {
    /// `Q` from full enumeration on the normalized instance.
    pub q_enumerated: Matrix,
    /// `(1/n) sum_k S_k Q_k S_k^T`.
    pub q_reconstructed: Matrix,
    pub max_entry_error: f64,
}

/// Verify `Q = (1/n) sum_k S_k Q_k S_k^T` numerically.
///
/// The identity is stated for unit diagonal Gram blocks, so the instance is
/// block-normalized first; both sides are computed on the normalized
/// instance.
pub fn prop1_reconstruct(inst: &ProblemInstance) -> Result<Prop1Report, SpectralError> {
    let (normalized, _) = normalize_blocks(inst)?;
    let n = normalized.n_blocks();
    if n > INDUCTION_LIMIT {
        return Err(SpectralError::Model(ModelError::SizeLimit {
            n,
            max: INDUCTION_LIMIT,
        }));
    }
    let q_enum = q_matrix(&normalized)?;
    let total = normalized.dim();
    let mut acc = Matrix::zeros(total, total);
    for k in 0..n {
        let comp = induction_components(&normalized, k)?;
        acc = acc.add(&comp.s_k.matmul(&comp.q_k).matmul(&comp.s_k.transpose()));
    }
    let q_rec = acc.scale(1.0 / n as f64);
    let err = q_enum.max_diff(&q_rec);
    Ok(Prop1Report {
        q_enumerated: q_enum,
        q_reconstructed: q_rec,
        max_entry_error: err,
    })
}

/// Extremal eigenvalues `(lambda_min, lambda_max)` of
/// `Theta_k = W_k^T Qhat_k W_k` on the block-normalized instance. The proof
/// machinery needs `lambda_min >= 0` and `lambda_max < 4/3`; the bounds are
/// returned as data for the caller to assert.
pub fn theta_bound_check(inst: &ProblemInstance, k: usize) -> Result<(f64, f64), SpectralError> {
    let (normalized, _) = normalize_blocks(inst)?;
    let comp = induction_components(&normalized, k)?;
    let theta = comp.w_k.transpose().matmul(&comp.q_hat_k).matmul(&comp.w_k);
    let n = theta.rows();
    let sym = Matrix::from_fn(n, n, |i, j| 0.5 * (theta[(i, j)] + theta[(j, i)]));
    let (eigs, _) = sym_eig(&sym)?;
    Ok((*eigs.last().unwrap(), eigs[0]))
}

/// Largest eigenvalue of `A Q A^T` for a single-coordinate-block candidate;
/// the objective of the tightness search. Errors on singular candidates.
pub fn tau_max_of(a: &Matrix) -> Result<f64, SpectralError> {
    let n = a.rows();
    // the bound is about nonsingular A; degenerate candidates are rejected
    LuFactors::factor(a)?;
    let partition = BlockPartition::unit(n);
    let inst = ProblemInstance::new(a.clone(), Matrix::zeros(n, 1), partition)
        .map_err(SpectralError::Model)?;
    let report = certify_lemma2(&inst)?;
    Ok(report.max_tau)
}

/// Outcome of the hill-climbing search for large `tau`.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_a: Matrix,
    pub best_tau: f64,
    /// Largest tau seen over every evaluated candidate (equals `best_tau`).
    pub max_tau_seen: f64,
    pub evaluations: u64,
}

/// Random-restart, coordinate-wise hill climbing on the entries of `A`
/// maximizing `lambda_max(A Q A^T)`, with multiplicative perturbations
/// `x(1 +- step)`, step halving on failure, and up to 50 restarts within the
/// `trials` evaluation budget. Singular candidates are skipped.
pub fn tightness_search(
    n: usize,
    trials: u64,
    rng: &mut Rng,
) -> Result<SearchResult, SpectralError> {
    if n > INDUCTION_LIMIT {
        return Err(SpectralError::Model(ModelError::SizeLimit {
            n,
            max: INDUCTION_LIMIT,
        }));
    }
    const RESTARTS: usize = 50;
    const INITIAL_STEP: f64 = 0.1;
    const MIN_STEP: f64 = 1e-3;

    let mut evals = 0u64;
    let mut best_tau = f64::NEG_INFINITY;
    let mut best_a = Matrix::identity(n);
    let mut max_seen = f64::NEG_INFINITY;

    let evaluate = |a: &Matrix, evals: &mut u64| -> Option<f64> {
        *evals += 1;
        // singular or numerically degenerate candidates are skipped
        tau_max_of(a).ok()
    };

    'restarts: for _ in 0..RESTARTS {
        if evals >= trials {
            break;
        }
        // fresh Gaussian start
        let mut current = Matrix::from_fn(n, n, |_, _| rng.next_normal());
        let mut current_tau = match evaluate(&current, &mut evals) {
            Some(t) => t,
            None => continue,
        };
        max_seen = max_seen.max(current_tau);

        let mut step = INITIAL_STEP;
        while step >= MIN_STEP {
            let mut improved = false;
            'coords: for i in 0..n {
                for j in 0..n {
                    for factor in [1.0 + step, 1.0 - step] {
                        if evals >= trials {
                            break 'coords;
                        }
                        let mut cand = current.clone();
                        cand[(i, j)] *= factor;
                        if let Some(t) = evaluate(&cand, &mut evals) {
                            max_seen = max_seen.max(t);
                            if t > current_tau + 1e-12 {
                                current = cand;
                                current_tau = t;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            if evals >= trials {
                if current_tau > best_tau {
                    best_tau = current_tau;
                    best_a = current.clone();
                }
                break 'restarts;
            }
        }
        if current_tau > best_tau {
            best_tau = current_tau;
            best_a = current;
        }
    }

    Ok(SearchResult {
        best_a,
        best_tau,
        max_tau_seen: max_seen,
        evaluations: evals,
    })
}

/// `eig(M)` through the eigenvalue map: every `tau` contributes its two
/// quadratic roots, reproducing the spectrum of `M` with multiplicity. This
/// route stays well-conditioned where the direct eigensolve does not (near
/// `tau = 1` the two roots coalesce and `M` is nearly defective).
pub fn eig_m_from_taus(taus: &[f64]) -> Vec<ComplexEigenvalue> {
    taus.iter().flat_map(|&t| tau_to_lambdas(t)).collect()
}

/// Worst-pair distance of a greedy nearest matching (with consumption)
/// between two equally sized eigenvalue multisets; small iff the multisets
/// agree including multiplicity.
pub fn eig_multiset_distance(a: &[ComplexEigenvalue], b: &[ComplexEigenvalue]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push((x.dist(y), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = 0.0f64;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
            if matched == a.len() {
                break;
            }
        }
    }
    worst
}

/// Full certification record for one instance: `tau` spectrum, `rho(M)` by
/// the general eigensolver, the eigenvalue-map mismatch, the decomposition
/// reconstruction error, and the `Theta_k` bounds.
pub fn certify_instance(inst: &ProblemInstance) -> Result<CertReport, SpectralError> {
    let em = m_matrix(inst)?;
    let taus = tau_spectrum(inst, &em.q)?;
    let rho_m = rho(&em.m)?;
    let lemma1 = lemma1_check(&em.m, &taus)?;
    let prop1 = prop1_reconstruct(inst)?;
    let mut theta_bounds = Vec::with_capacity(inst.n_blocks());
    for k in 0..inst.n_blocks() {
        theta_bounds.push(theta_bound_check(inst, k)?);
    }
    Ok(CertReport {
        taus,
        rho_m,
        lemma1_max_mismatch: lemma1.max_mismatch(),
        prop1_max_entry_error: prop1.max_entry_error,
        theta_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densenum::invert;
    use crate::model::{counterexample_instance, generate_instance, Dist, RandomSpec};

    fn unit_instance(a: Matrix) -> ProblemInstance {
        let n = a.rows();
        ProblemInstance::new(a, Matrix::zeros(n, 1), BlockPartition::unit(n)).unwrap()
    }

    #[test]
    fn l_sigma_identity_order_is_lower_triangle() {
        let inst = counterexample_instance();
        let g = gram(&inst);
        let (l, r) = build_l_sigma(&g, &inst.partition, &Permutation::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if j <= i { g[(i, j)] } else { 0.0 };
                assert_eq!(l[(i, j)], expect);
            }
        }
        assert!(l.sub(&r).max_diff(&g) == 0.0, "L - R = gram exactly");
    }

    #[test]
    fn l_231_matches_displayed_pattern() {
        // order (2,3,1): row 1 full, row 2 diagonal only, row 3 gets (3,2)
        let inst = counterexample_instance();
        let g = gram(&inst);
        let sigma = Permutation::new(vec![1, 2, 0]).unwrap();
        let (l, _) = build_l_sigma(&g, &inst.partition, &sigma).unwrap();
        let expect = Matrix::from_rows(&[
            &[g[(0, 0)], g[(0, 1)], g[(0, 2)]],
            &[0.0, g[(1, 1)], 0.0],
            &[0.0, g[(2, 1)], g[(2, 2)]],
        ]);
        assert_eq!(l, expect);
    }

    #[test]
    fn l_sigma_of_orthogonal_is_identity() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let inst = unit_instance(a);
        let g = gram(&inst);
        for sigma in enumerate_permutations(2).unwrap() {
            let (l, _) = build_l_sigma(&g, &inst.partition, &sigma).unwrap();
            assert!(l.max_diff(&Matrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn transpose_is_reverse_order() {
        // L_sigma^T = L_{sigma reversed}, checked entrywise for all orders
        for n in 2..=5usize {
            let inst = generate_instance(&RandomSpec {
                dist: Dist::Gaussian,
                n_coords: n,
                seed: 7 + n as u64,
            });
            let g = gram(&inst);
            for sigma in enumerate_permutations(n).unwrap() {
                let (l, _) = build_l_sigma(&g, &inst.partition, &sigma).unwrap();
                let (l_rev, _) = build_l_sigma(&g, &inst.partition, &sigma.reversed()).unwrap();
                assert_eq!(l.transpose(), l_rev, "n={n} sigma={sigma}");
            }
        }
    }

    #[test]
    fn invert_l_sigma_analytic_and_dense_agreement() {
        // unit lower triangular 2x2
        let l = Matrix::from_rows(&[&[1.0, 0.0], &[0.7, 1.0]]);
        let p = BlockPartition::unit(2);
        let inv = invert_l_sigma(&l, &p, &Permutation::identity(2)).unwrap();
        assert!(inv.max_diff(&Matrix::from_rows(&[&[1.0, 0.0], &[-0.7, 1.0]])) < 1e-15);

        let id = Matrix::identity(3);
        let inv = invert_l_sigma(&id, &BlockPartition::unit(3), &Permutation::identity(3)).unwrap();
        assert_eq!(inv, Matrix::identity(3));

        // random block instance, random order, vs dense inverse
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Gaussian,
            n_coords: 8,
            seed: 40,
        });
        let partition = BlockPartition::new(vec![2, 3, 1, 2]);
        let inst = ProblemInstance::new(inst.a.clone(), inst.b.clone(), partition).unwrap();
        let g = gram(&inst);
        let sigma = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let (l, _) = build_l_sigma(&g, &inst.partition, &sigma).unwrap();
        let fast = invert_l_sigma(&l, &inst.partition, &sigma).unwrap();
        let dense = invert(&l).unwrap();
        assert!(fast.max_diff(&dense) <= 1e-10);
    }

    #[test]
    fn q_of_identity_gram_is_identity() {
        let a = Matrix::identity(4);
        let inst = unit_instance(a);
        let q = q_matrix(&inst).unwrap();
        assert!(q.max_diff(&Matrix::identity(4)) < 1e-14);
    }

    #[test]
    fn q_two_blocks_closed_form() {
        // unit columns, w = a1^T a2: Q = [[1, -w/2], [-w/2, 1]]
        let theta: f64 = 0.3;
        let a = Matrix::from_rows(&[&[1.0, theta.cos()], &[0.0, theta.sin()]]);
        let inst = unit_instance(a);
        let w = theta.cos();
        let q = q_matrix(&inst).unwrap();
        let expect = Matrix::from_rows(&[&[1.0, -w / 2.0], &[-w / 2.0, 1.0]]);
        assert!(q.max_diff(&expect) < 1e-14);
    }

    #[test]
    fn augmented_counterexample_rhos() {
        let inst = counterexample_instance();
        for sigma in enumerate_permutations(3).unwrap() {
            let u = build_augmented(&inst, &sigma).unwrap();
            let r = rho(&u.m_sigma).unwrap();
            assert!(r > 1.02, "rho(M_{sigma}) = {r}");
            // bar_b = [A^T b; b] = 0 here
            assert_eq!(u.bar_b.norm_max(), 0.0);
        }
    }

    #[test]
    fn augmented_orthogonal_nilpotent() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let inst = unit_instance(a.clone());
        let sigma = Permutation::identity(2);
        let u = build_augmented(&inst, &sigma).unwrap();
        // M = [0, A^T; 0, 0]
        let mut expect = Matrix::zeros(4, 4);
        expect.set_block(0, 2, &a.transpose());
        assert!(u.m_sigma.max_diff(&expect) < 1e-12);
        assert!(rho(&u.m_sigma).unwrap() < 1e-9);
    }

    #[test]
    fn expected_matrix_counterexample() {
        let inst = counterexample_instance();
        let em = m_matrix(&inst).unwrap();
        assert!(em.q.asymmetry() == 0.0, "returned Q is symmetrized");
        let r = rho(&em.m).unwrap();
        assert!(r < 1.0, "rho(M) = {r}");
        // frozen reference from an independent implementation of the same
        // construction (numpy): rho(M) = 0.9755722471
        assert!((r - 0.9755722471).abs() < 1e-8);
    }

    #[test]
    fn expected_matrix_random_instances_contract() {
        for seed in 0..5 {
            let inst = generate_instance(&RandomSpec {
                dist: Dist::Gaussian,
                n_coords: 4,
                seed: 300 + seed,
            });
            let em = m_matrix(&inst).unwrap();
            let r = rho(&em.m).unwrap();
            assert!(r < 1.0, "seed {seed}: rho = {r}");
        }
    }

    #[test]
    fn lemma1_analytic_root_cases() {
        // tau = 1: double root 0
        let roots = tau_to_lambdas(1.0);
        assert!(roots.iter().all(|r| r.modulus() < 1e-15));
        // tau = 1/2: roots 1/2 +- i/2, modulus sqrt(1/2)
        let roots = tau_to_lambdas(0.5);
        for r in roots {
            assert!((r.re - 0.5).abs() < 1e-15);
            assert!((r.im.abs() - 0.5).abs() < 1e-15);
            assert!((r.modulus() - 0.5f64.sqrt()).abs() < 1e-15);
        }
        // tau = 4/3: roots 1/3 and -1 (modulus 1, the boundary)
        let roots = tau_to_lambdas(4.0 / 3.0);
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 1.0).abs() < 1e-12 && (re[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(roots.iter().all(|r| r.im == 0.0));
    }

    #[test]
    fn rho_from_taus_closed_forms() {
        assert!((rho_from_taus(&[0.75]) - 0.5).abs() < 1e-15);
        let expect = 0.25 + 0.3125f64.sqrt();
        assert!((rho_from_taus(&[1.25]) - expect).abs() < 1e-15);
        assert_eq!(rho_from_taus(&[0.0]), 1.0);
        assert!(rho_from_taus(&[-0.5]) > 1.0);
    }

    #[test]
    fn rho_routes_agree_on_counterexample() {
        let inst = counterexample_instance();
        let em = m_matrix(&inst).unwrap();
        let taus = tau_spectrum(&inst, &em.q).unwrap();
        let via_taus = rho_from_taus(&taus);
        let via_eig = rho(&em.m).unwrap();
        assert!(
            (via_taus - via_eig).abs() <= 1e-8,
            "{via_taus} vs {via_eig}"
        );
        let rep = lemma1_check(&em.m, &taus).unwrap();
        assert!(
            rep.max_mismatch() <= 1e-9,
            "mismatch {}",
            rep.max_mismatch()
        );
    }

    #[test]
    fn lemma2_identity_gram_and_counterexample() {
        let inst = unit_instance(Matrix::identity(3));
        let rep = certify_lemma2(&inst).unwrap();
        assert!(rep.taus.iter().all(|&t| (t - 1.0).abs() < 1e-12));

        let rep = certify_lemma2(&counterexample_instance()).unwrap();
        assert!(rep.in_bounds(), "taus {:?}", rep.taus);
    }

    #[test]
    fn normalization_basics() {
        // already normalized: unchanged, D = I
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let inst = unit_instance(a.clone());
        let (norm, d) = normalize_blocks(&inst).unwrap();
        assert!(norm.a.max_diff(&a) < 1e-12);
        assert!(d.max_diff(&Matrix::identity(4)) < 1e-12);

        // unit blocks: columns are rescaled to unit norm
        let inst = counterexample_instance();
        let (norm, _) = normalize_blocks(&inst).unwrap();
        let g = gram(&norm);
        for i in 0..3 {
            assert!((g[(i, i)] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_preserves_m_spectrum() {
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Gaussian,
            n_coords: 6,
            seed: 77,
        });
        let partition = BlockPartition::new(vec![1, 2, 3]);
        let inst = ProblemInstance::new(inst.a.clone(), inst.b.clone(), partition).unwrap();
        let (norm, _) = normalize_blocks(&inst).unwrap();
        let m_a = m_matrix(&inst).unwrap().m;
        let m_n = m_matrix(&norm).unwrap().m;
        let e_a = general_eig(&m_a).unwrap();
        let e_n = general_eig(&m_n).unwrap();
        let d = eig_multiset_distance(&e_a, &e_n);
        assert!(d <= 1e-8, "eig multiset moved by {d}");
    }

    #[test]
    fn s_k_moves_block_column_to_end() {
        let partition = BlockPartition::new(vec![1, 2, 1]);
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Uniform,
            n_coords: 4,
            seed: 5,
        });
        let inst = ProblemInstance::new(inst.a.clone(), inst.b.clone(), partition.clone()).unwrap();
        for k in 0..3 {
            let s = s_k_matrix(&partition, k);
            // orthogonality: S^T = S^{-1}
            assert!(s.transpose().matmul(&s).max_diff(&Matrix::identity(4)) < 1e-15);
            let moved = inst.a.matmul(&s);
            // columns: all blocks except k, then block k
            let mut expect = Matrix::zeros(4, 4);
            let mut col = 0;
            for blk in (0..3).filter(|&b| b != k).chain(std::iter::once(k)) {
                let b = inst.block_cols(blk);
                expect.set_block(0, col, &b);
                col += b.cols();
            }
            assert_eq!(moved, expect, "k={k}");
        }
        // S_n (last block) is the identity
        let s_last = s_k_matrix(&partition, 2);
        assert_eq!(s_last, Matrix::identity(4));
    }

    #[test]
    fn q_hat_appendix_fixture() {
        // n=3 unit columns: Qhat_3 = [[1, -w12/2], [-w12/2, 1]]
        let inst = counterexample_instance();
        let (norm, _) = normalize_blocks(&inst).unwrap();
        let comp = induction_components(&norm, 2).unwrap();
        let g = gram(&norm);
        let w12 = g[(0, 1)];
        let expect = Matrix::from_rows(&[&[1.0, -w12 / 2.0], &[-w12 / 2.0, 1.0]]);
        assert!(comp.q_hat_k.max_diff(&expect) < 1e-12);
    }

    #[test]
    fn prop1_counterexample_and_blocks() {
        let rep = prop1_reconstruct(&counterexample_instance()).unwrap();
        assert!(
            rep.max_entry_error <= 1e-10,
            "error {}",
            rep.max_entry_error
        );

        // mixed block sizes
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Gaussian,
            n_coords: 8,
            seed: 12345,
        });
        let partition = BlockPartition::new(vec![1, 2, 1, 3, 1]);
        let inst = ProblemInstance::new(inst.a.clone(), inst.b.clone(), partition).unwrap();
        let rep = prop1_reconstruct(&inst).unwrap();
        assert!(rep.max_entry_error <= 1e-9, "error {}", rep.max_entry_error);

        // identity gram: both sides are the identity exactly
        let rep = prop1_reconstruct(&unit_instance(Matrix::identity(3))).unwrap();
        assert!(rep.max_entry_error < 1e-14);
    }

    #[test]
    fn theta_bounds_cases() {
        // orthogonal A: W_k = 0 so Theta = 0
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let (lo, hi) = theta_bound_check(&unit_instance(a), 1).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);

        // counterexample, k = 3 (frozen from the independent construction:
        // theta = 0.9691358)
        let (lo, hi) = theta_bound_check(&counterexample_instance(), 2).unwrap();
        assert!(lo >= -1e-10 && hi < 4.0 / 3.0);
        assert!((hi - 0.9691358).abs() < 1e-6, "theta = {hi}");
    }

    #[test]
    fn tau_max_rejects_singular_candidates() {
        // all-equal columns: singular
        let a = Matrix::from_fn(3, 3, |_, _| 1.0);
        assert!(tau_max_of(&a).is_err());
    }

    #[test]
    fn small_tightness_search_stays_below_bound() {
        let mut rng = Rng::seed_from(404);
        let res = tightness_search(3, 300, &mut rng).unwrap();
        assert!(res.evaluations <= 300);
        assert!(res.best_tau > 0.9, "search should at least approach 1.0");
        assert!(res.max_tau_seen < 4.0 / 3.0);
    }
}
