//! Acceptance suite: every release criterion as one test, each printing one
//! PASS/FAIL line (run with `--nocapture` to see the lines as they come).
//!
//! All randomness is pinned to fixed seeds chosen up front; nothing here is
//! tuned per seed. The benchmark reproduction (criterion 7) compares against
//! the published reference values at the stated tolerances and reports every
//! entry; the `n100` variant of it is hours-scale and `#[ignore]`d by
//! default:
//!
//! ```text
//! cargo test -p permadmm --test acceptance --release -- --ignored --nocapture
//! ```

use permadmm::bench::{run_grid, ExperimentSpec};
use permadmm::densenum::{general_eig, solve_linear, Matrix};
use permadmm::model::{
    counterexample_instance, enumerate_permutations, generate_instance, generate_with_partition,
    gram, BlockPartition, Dist, ProblemInstance, RandomSpec,
};
use permadmm::rng::{derive_seed, Rng};
use permadmm::solvers::{
    expected_trajectory, run_until, Algo, RunStatus, SolverConfig, SolverState, Sweeper,
};
use permadmm::spectral::{
    build_augmented, certify_lemma2, eig_m_from_taus, eig_multiset_distance, lemma1_check,
    m_matrix, normalize_blocks, prop1_reconstruct, rho, rho_from_taus, tau_spectrum,
    theta_bound_check, tightness_search,
};

const MASTER_SEED: u64 = 42;

fn report(criterion: u32, name: &str, pass: bool, details: &str) {
    println!(
        "criterion {criterion} ({name}): {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {details}");
}

/// Seeded instance with a random block structure: block count in
/// `[min_n, max_n]`, block sizes in {1, 2, 3}.
fn mixed_block_instance(dist: Dist, min_n: usize, max_n: usize, seed: u64) -> ProblemInstance {
    let mut srng = Rng::seed_from(derive_seed(seed, &[11]));
    let n_blocks = min_n + srng.below((max_n - min_n + 1) as u64) as usize;
    let sizes: Vec<usize> = (0..n_blocks).map(|_| 1 + srng.below(3) as usize).collect();
    generate_with_partition(dist, BlockPartition::new(sizes), seed)
}

#[test]
fn acceptance_01_counterexample_certification() {
    let inst = counterexample_instance();
    let mut min_rho_sigma = f64::INFINITY;
    for sigma in enumerate_permutations(3).unwrap() {
        let u = build_augmented(&inst, &sigma).unwrap();
        min_rho_sigma = min_rho_sigma.min(rho(&u.m_sigma).unwrap());
    }
    let em = m_matrix(&inst).unwrap();
    let rho_m = rho(&em.m).unwrap();
    let pass = min_rho_sigma > 1.02 && rho_m < 1.0;
    report(
        1,
        "counterexample certification",
        pass,
        &format!("min rho(M_sigma) = {min_rho_sigma:.6} (> 1.02), rho(M) = {rho_m:.6} (< 1)"),
    );
}

#[test]
fn acceptance_02_lemma2_randomized_certification() {
    let instances_per_dist = 1000;
    let mut violations = 0usize;
    let mut skipped = 0usize;
    let mut min_low = f64::INFINITY;
    let mut min_high = f64::INFINITY;
    for dist in Dist::ALL {
        for idx in 0..instances_per_dist {
            let seed = derive_seed(MASTER_SEED, &[dist.tag(), idx as u64]);
            let inst = mixed_block_instance(dist, 2, 6, seed);
            match certify_lemma2(&inst) {
                Ok(rep) => {
                    let (lo, hi) = rep.margins();
                    min_low = min_low.min(lo);
                    min_high = min_high.min(hi);
                    if !rep.in_bounds() {
                        violations += 1;
                    }
                }
                Err(_) => skipped += 1, // singular draw, tallied and excluded
            }
        }
    }
    report(
        2,
        "eig(A Q A^T) in (0, 4/3) over 4000 seeded instances",
        violations == 0,
        &format!(
            "violations = {violations}, skipped singular = {skipped}, \
             min margin to 0 = {min_low:.3e}, min margin to 4/3 = {min_high:.3e}"
        ),
    );
}

#[test]
fn acceptance_03_lemma1_bijection() {
    let mut worst_mismatch = 0.0f64;
    let mut worst_rho_gap = 0.0f64;
    let mut count = 0;
    'outer: for dist in Dist::ALL {
        for idx in 0..50 {
            let seed = derive_seed(MASTER_SEED, &[90, dist.tag(), idx]);
            let inst = mixed_block_instance(dist, 2, 6, seed);
            let em = match m_matrix(&inst) {
                Ok(em) => em,
                Err(_) => continue, // singular draw
            };
            let taus = tau_spectrum(&inst, &em.q).unwrap();
            let rep = lemma1_check(&em.m, &taus).unwrap();
            worst_mismatch = worst_mismatch.max(rep.max_mismatch());
            let gap = (rho_from_taus(&taus) - rho(&em.m).unwrap()).abs();
            worst_rho_gap = worst_rho_gap.max(gap);
            count += 1;
            if count == 200 {
                break 'outer;
            }
        }
    }
    let pass = count >= 195 && worst_mismatch <= 1e-7 && worst_rho_gap <= 1e-7;
    report(
        3,
        "eigenvalue map between M and A Q A^T",
        pass,
        &format!(
            "{count} instances, max bidirectional mismatch = {worst_mismatch:.3e} (<= 1e-7), \
             max |rho-from-taus - rho-from-eig| = {worst_rho_gap:.3e} (<= 1e-7)"
        ),
    );
}

#[test]
fn acceptance_04_decomposition_identity() {
    // exact fixture: normalized counterexample, Qhat_3 = [[1, -w/2], [-w/2, 1]]
    let inst = counterexample_instance();
    let (norm, _) = normalize_blocks(&inst).unwrap();
    let comp = permadmm::spectral::induction_components(&norm, 2).unwrap();
    let w12 = gram(&norm)[(0, 1)];
    let fixture = Matrix::from_rows(&[&[1.0, -w12 / 2.0], &[-w12 / 2.0, 1.0]]);
    let fixture_err = comp.q_hat_k.max_diff(&fixture);

    let mut worst = prop1_reconstruct(&inst).unwrap().max_entry_error;
    let mut count = 1;
    // 40 instances with the fixed pattern (1,2,1,3,1)
    for dist in Dist::ALL {
        for idx in 0..10u64 {
            let seed = derive_seed(MASTER_SEED, &[91, dist.tag(), idx]);
            let inst =
                generate_with_partition(dist, BlockPartition::new(vec![1, 2, 1, 3, 1]), seed);
            if let Ok(rep) = prop1_reconstruct(&inst) {
                worst = worst.max(rep.max_entry_error);
                count += 1;
            }
        }
    }
    // random mixed-block instances up to 200 total
    'outer: for dist in Dist::ALL {
        for idx in 0..45u64 {
            let seed = derive_seed(MASTER_SEED, &[92, dist.tag(), idx]);
            let inst = mixed_block_instance(dist, 2, 6, seed);
            if let Ok(rep) = prop1_reconstruct(&inst) {
                worst = worst.max(rep.max_entry_error);
                count += 1;
            }
            if count >= 200 {
                break 'outer;
            }
        }
    }
    let pass = fixture_err <= 1e-12 && worst <= 1e-9 && count >= 195;
    report(
        4,
        "Q decomposition identity",
        pass,
        &format!(
            "fixture error = {fixture_err:.3e}, max reconstruction error over {count} instances = {worst:.3e} (<= 1e-9)"
        ),
    );
}

#[test]
fn acceptance_05_round_equals_affine_map_and_fixed_point() {
    let mut worst_round = 0.0f64;
    let mut worst_drift = 0.0f64;
    let mut count = 0;
    'outer: for dist in Dist::ALL {
        for idx in 0..25u64 {
            let seed = derive_seed(MASTER_SEED, &[93, dist.tag(), idx]);
            let mut srng = Rng::seed_from(derive_seed(seed, &[1]));
            let n = 2 + srng.below(4) as usize; // 2..=5 blocks, all orders enumerable
            let base = generate_instance(&RandomSpec {
                dist,
                n_coords: n,
                seed,
            });
            // nonzero rhs so the fixed point is away from the origin
            let b = Matrix::from_fn(n, 1, |_, _| srng.next_normal());
            let inst = match ProblemInstance::new(base.a.clone(), b.clone(), base.partition.clone())
            {
                Ok(i) => i,
                Err(_) => continue,
            };
            let sweeper = match Sweeper::new(&inst, 1.0) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let x_star = match solve_linear(&inst.a, &b) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let state0 = SolverState::random(n, &mut srng);
            for sigma in enumerate_permutations(n).unwrap() {
                let u = match build_augmented(&inst, &sigma) {
                    Ok(u) => u,
                    Err(_) => continue,
                };
                // one sweep from state0 vs the affine map
                let mut state = state0.clone();
                sweeper.round_with_order(&mut state, &sigma);
                let y1 = u
                    .m_sigma
                    .matmul(&state0.stacked())
                    .add(&solve_linear(&u.bar_l, &u.bar_b).unwrap());
                worst_round = worst_round.max(state.stacked().max_diff(&y1));

                // fixed point y* = [A^{-1} b; 0]
                let mut fixed = SolverState::new(x_star.clone(), Matrix::zeros(n, 1));
                sweeper.round_with_order(&mut fixed, &sigma);
                let drift = fixed
                    .stacked()
                    .max_diff(&SolverState::new(x_star.clone(), Matrix::zeros(n, 1)).stacked());
                worst_drift = worst_drift.max(drift);
            }
            count += 1;
            if count == 100 {
                break 'outer;
            }
        }
    }
    let pass = count >= 95 && worst_round <= 1e-9 && worst_drift <= 1e-9;
    report(
        5,
        "sweep equals affine round map; optimum is a fixed point",
        pass,
        &format!(
            "{count} instances, all orders: max |sweep - map| = {worst_round:.3e} (<= 1e-9), \
             max fixed-point drift = {worst_drift:.3e} (<= 1e-9)"
        ),
    );
}

#[test]
fn acceptance_06_expected_trajectory_matches_matrix_power() {
    let inst = counterexample_instance();
    let runs = 10_000;
    let horizon = 200;
    let config = SolverConfig::new(1e-12, derive_seed(MASTER_SEED, &[94]));
    let stats = expected_trajectory(&inst, &config, runs, horizon).unwrap();
    let em = m_matrix(&inst).unwrap();

    // with b = 0 the expected iterate is exactly M^k y0
    let y0 = stats.mean[0].clone();
    let mut target = y0.clone();
    let mut worst_z = 0.0f64;
    let checkpoints = [10usize, 50, 200];
    let mut next = 0;
    for k in 1..=horizon {
        target = em.m.matmul(&target);
        if next < checkpoints.len() && k == checkpoints[next] {
            let se = stats.std_error(k);
            for i in 0..target.rows() {
                let diff = (stats.mean[k][(i, 0)] - target[(i, 0)]).abs();
                let z = if se[(i, 0)] > 0.0 {
                    diff / se[(i, 0)]
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst_z = worst_z.max(z);
            }
            next += 1;
        }
    }
    let final_norm = stats.mean[horizon].norm2();
    let y0_norm = y0.norm2();
    let pass = worst_z <= 5.0 && final_norm < 0.1 * y0_norm;
    report(
        6,
        "expected trajectory vs matrix power",
        pass,
        &format!(
            "{runs} runs, max componentwise z at k in {{10,50,200}} = {worst_z:.2} (<= 5), \
             |mean y^200| = {final_norm:.3e} < 0.1 |y^0| = {:.3e}",
            0.1 * y0_norm
        ),
    );
}

/// Published reference values: per (dist, N), the cyclic divergence
/// percentage and the geometric means for
/// (cyclic, rp, gd) at eps = 1e-2 then eps = 1e-3.
const TABLE1_SMALL: [(Dist, usize, f64, [f64; 6]); 8] = [
    (
        Dist::Gaussian,
        3,
        0.7,
        [1.4e1, 3.4e1, 5.0e1, 3.2e1, 8.8e1, 1.4e2],
    ),
    (
        Dist::Gaussian,
        10,
        1.1,
        [4.1e1, 1.8e2, 2.0e2, 1.2e2, 1.1e3, 1.5e3],
    ),
    (
        Dist::LogNormal,
        3,
        0.8,
        [1.5e1, 3.7e1, 5.7e1, 3.3e1, 9.6e1, 1.7e2],
    ),
    (
        Dist::LogNormal,
        10,
        39.2,
        [1.2e2, 3.4e2, 6.4e2, 3.2e2, 2.4e3, 6.3e3],
    ),
    (
        Dist::Uniform,
        3,
        3.2,
        [2.8e1, 7.4e1, 1.5e2, 7.0e1, 2.6e2, 6.0e2],
    ),
    (
        Dist::Uniform,
        10,
        83.0,
        [2.1e2, 4.1e2, 1.2e3, 5.2e2, 3.0e3, 9.1e3],
    ),
    (
        Dist::CirculantHankel,
        3,
        5.6,
        [1.2e1, 1.7e1, 1.5e1, 1.7e1, 2.8e1, 2.6e1],
    ),
    (
        Dist::CirculantHankel,
        10,
        54.3,
        [4.2e1, 6.0e1, 6.5e1, 7.5e1, 1.3e2, 1.7e2],
    ),
];

fn check_table1_rows(
    rows: &[(Dist, usize, f64, [f64; 6])],
    instances: usize,
    criterion: u32,
    exact_all_diverged: &[(Dist, usize)],
) {
    let algos = [Algo::Cyclic, Algo::Rp, Algo::Gd];
    let epsilons = [1e-2, 1e-3];
    let mut failures: Vec<String> = Vec::new();
    let mut lines: Vec<String> = Vec::new();

    for &(dist, n, ref_div_pct, ref_geo) in rows {
        let spec = ExperimentSpec::new(
            vec![dist],
            vec![n],
            instances,
            epsilons.to_vec(),
            algos.to_vec(),
            MASTER_SEED,
        );
        let cells = run_grid(&spec);
        // divergence fraction from the eps = 1e-2 cyclic cell
        let cyc = cells
            .iter()
            .find(|c| c.algo == Algo::Cyclic && c.epsilon == 1e-2)
            .unwrap();
        let div_pct = 100.0 * cyc.divergence_fraction();
        let div_ok = (div_pct - ref_div_pct).abs() <= 3.0;
        if exact_all_diverged.contains(&(dist, n)) && cyc.converged != 0 {
            failures.push(format!("{dist} N={n}: expected no converged cyclic runs"));
        }
        if !div_ok {
            failures.push(format!(
                "{dist} N={n}: divergence {div_pct:.1}% vs reference {ref_div_pct}% (> 3pp)"
            ));
        }
        let mut geo_text = String::new();
        for (slot, (&eps, &algo)) in epsilons
            .iter()
            .flat_map(|e| algos.iter().map(move |a| (e, a)))
            .enumerate()
        {
            let cell = cells
                .iter()
                .find(|c| c.algo == algo && c.epsilon == eps)
                .unwrap();
            let reference = ref_geo[slot];
            match cell.geomean_iters {
                Some(g) => {
                    let ratio = g / reference;
                    let ok = (0.5..=2.0).contains(&ratio);
                    geo_text.push_str(&format!(" {algo}@{eps}: {g:.3} (x{ratio:.2})"));
                    if !ok {
                        failures.push(format!(
                            "{dist} N={n} {algo} eps={eps}: geomean {g:.1} vs reference {reference} (x{ratio:.2})"
                        ));
                    }
                }
                None => {
                    if reference.is_finite() {
                        failures.push(format!(
                            "{dist} N={n} {algo} eps={eps}: no geomean (reference {reference})"
                        ));
                    } else {
                        geo_text.push_str(&format!(" {algo}@{eps}: N/A (as reference)"));
                    }
                }
            }
        }
        lines.push(format!(
            "  {dist} N={n}: div {div_pct:.1}% (ref {ref_div_pct}%){geo_text}"
        ));
    }
    for l in &lines {
        println!("{l}");
    }
    report(
        criterion,
        "benchmark grid vs reference values",
        failures.is_empty(),
        &if failures.is_empty() {
            format!("all {} rows within tolerance", rows.len())
        } else {
            format!(
                "{} entries out of tolerance: {}",
                failures.len(),
                failures.join("; ")
            )
        },
    );
}

#[test]
fn acceptance_07_benchmark_reproduction_small() {
    check_table1_rows(&TABLE1_SMALL, 1000, 7, &[]);
}

/// Extended N = 100 rows (300 instances; hours-scale for the slow GD cells).
const TABLE1_N100: [(Dist, usize, f64, [f64; 6]); 4] = [
    (
        Dist::Gaussian,
        100,
        3.0,
        [1.7e2, 4.3e2, 3.6e2, 1.0e3, 7.4e3, 6.5e3],
    ),
    (
        Dist::LogNormal,
        100,
        100.0,
        [f64::INFINITY, 5.5e2, 5.4e3, f64::INFINITY, 8.8e3, 1.0e5],
    ),
    (
        Dist::Uniform,
        100,
        100.0,
        [f64::INFINITY, 9.1e2, 1.4e4, f64::INFINITY, 1.4e4, 9.7e4],
    ),
    (
        Dist::CirculantHankel,
        100,
        100.0,
        [f64::INFINITY, 1.3e2, 1.7e2, f64::INFINITY, 2.9e2, 6.5e2],
    ),
];

#[test]
#[ignore = "hours-scale extended run; use --ignored to include"]
fn acceptance_07_benchmark_reproduction_n100() {
    check_table1_rows(
        &TABLE1_N100,
        300,
        7,
        &[
            (Dist::LogNormal, 100),
            (Dist::Uniform, 100),
            (Dist::CirculantHankel, 100),
        ],
    );
}

#[test]
fn acceptance_08_independent_randomization_claims() {
    let cx = counterexample_instance();

    // pd_radmm always diverges on the counterexample; a tight target keeps
    // transient dips of the divergent trajectory from reading as converged
    let mut pd_diverged = 0;
    for run in 0..100u64 {
        let mut config = SolverConfig::new(1e-4, derive_seed(MASTER_SEED, &[95, run]));
        config.max_rounds = 100_000;
        let out = run_until(&cx, &config, Algo::PdRadmm);
        if matches!(out.status, RunStatus::Diverged | RunStatus::Stalled) {
            pd_diverged += 1;
        }
    }

    // p_radmm converges on the counterexample
    let mut p_converged = 0;
    for run in 0..100u64 {
        let config = SolverConfig::new(1e-2, derive_seed(MASTER_SEED, &[96, run]));
        let out = run_until(&cx, &config, Algo::PRadmm);
        if out.status == RunStatus::Converged {
            p_converged += 1;
        }
    }

    // p_radmm diverges on Gaussian instances with 30 blocks
    let mut p30_diverged = 0;
    for run in 0..50u64 {
        let seed = derive_seed(MASTER_SEED, &[97, run]);
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Gaussian,
            n_coords: 30,
            seed,
        });
        let mut config = SolverConfig::new(1e-2, derive_seed(seed, &[7]));
        config.max_rounds = 100_000;
        let out = run_until(&inst, &config, Algo::PRadmm);
        if matches!(out.status, RunStatus::Diverged | RunStatus::Stalled) {
            p30_diverged += 1;
        }
    }

    let pass = pd_diverged >= 95 && p_converged >= 95 && p30_diverged >= 40;
    report(
        8,
        "with-replacement randomization behavior",
        pass,
        &format!(
            "pd_radmm diverged {pd_diverged}/100 (>= 95), p_radmm converged {p_converged}/100 (>= 95), \
             p_radmm n=30 gaussian diverged {p30_diverged}/50 (>= 40)"
        ),
    );
}

#[test]
fn acceptance_09_tightness_search() {
    let mut rng = Rng::seed_from(derive_seed(MASTER_SEED, &[98]));
    let res = tightness_search(3, 10_000, &mut rng).unwrap();
    let bound = 4.0 / 3.0;
    let pass = res.best_tau > 1.0 && res.best_tau < bound && res.max_tau_seen < bound;
    report(
        9,
        "tau tightness search",
        pass,
        &format!(
            "best tau = {:.6} in (1, 4/3); max over {} evaluations = {:.6} < 4/3",
            res.best_tau, res.evaluations, res.max_tau_seen
        ),
    );
}

#[test]
fn acceptance_10_normalization_invariance() {
    // eig(M) is compared through the tau route (each tau contributes its two
    // quadratic roots), which stays well-conditioned where the direct
    // eigensolve of M does not: near tau = 1 the root pair coalesces and the
    // direct route cannot resolve eigenvalues beyond ~sqrt(machine eps) — on
    // the worst instance here LAPACK's dgeev shows the same ~1e-7 direct
    // distance as our solver. The direct-route distance is reported as
    // supplementary data.
    let mut worst = 0.0f64;
    let mut worst_direct = 0.0f64;
    let mut count = 0;
    'outer: for dist in Dist::ALL {
        for idx in 0..25u64 {
            let seed = derive_seed(MASTER_SEED, &[99, dist.tag(), idx]);
            let inst = mixed_block_instance(dist, 2, 4, seed);
            let (norm, _) = match normalize_blocks(&inst) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let (em_a, em_n) = match (m_matrix(&inst), m_matrix(&norm)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            let taus_a = tau_spectrum(&inst, &em_a.q).unwrap();
            let taus_n = tau_spectrum(&norm, &em_n.q).unwrap();
            let e_a = eig_m_from_taus(&taus_a);
            let e_n = eig_m_from_taus(&taus_n);
            worst = worst.max(eig_multiset_distance(&e_a, &e_n));

            let d_a = general_eig(&em_a.m).unwrap();
            let d_n = general_eig(&em_n.m).unwrap();
            worst_direct = worst_direct.max(eig_multiset_distance(&d_a, &d_n));
            count += 1;
            if count == 100 {
                break 'outer;
            }
        }
    }
    let pass = count >= 95 && worst <= 1e-8;
    report(
        10,
        "block normalization leaves eig(M) unchanged",
        pass,
        &format!(
            "{count} instances, max eigenvalue multiset distance = {worst:.3e} (<= 1e-8); \
             direct-eigensolve route for reference: {worst_direct:.3e}"
        ),
    );
}

// Cross-check used by the divergence-ratio convention: spectral and
// trajectory classification agree on nearly all instances.
#[test]
fn spectral_vs_trajectory_classification_agreement() {
    let mut agree = 0;
    let total = 200;
    for idx in 0..total {
        let seed = derive_seed(MASTER_SEED, &[100, idx]);
        let inst = generate_instance(&RandomSpec {
            dist: Dist::Gaussian,
            n_coords: 10,
            seed,
        });
        let spectral_diverges = permadmm::bench::spectral_classify_cyclic(&inst).unwrap_or(true);
        let mut config = SolverConfig::new(1e-2, derive_seed(seed, &[7]));
        config.max_rounds = 200_000;
        let out = run_until(&inst, &config, Algo::Cyclic);
        let trajectory_diverges = matches!(out.status, RunStatus::Diverged | RunStatus::Stalled);
        if spectral_diverges == trajectory_diverges {
            agree += 1;
        }
    }
    println!("classification agreement: {agree}/{total}");
    assert!(
        agree * 100 >= total * 95,
        "agreement {agree}/{total} below 95%"
    );
}

// Theta bound spot check at acceptance scale (the criterion-2 sweep already
// covers the spectrum bound; this pins the proof-side quantity).
#[test]
fn theta_bounds_random_sweep() {
    let mut checked = 0;
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    'outer: for dist in Dist::ALL {
        for idx in 0..60u64 {
            let seed = derive_seed(MASTER_SEED, &[101, dist.tag(), idx]);
            let inst = mixed_block_instance(dist, 2, 5, seed);
            for k in 0..inst.n_blocks() {
                match theta_bound_check(&inst, k) {
                    Ok((lo, hi)) => {
                        worst_low = worst_low.min(lo);
                        worst_high = worst_high.max(hi);
                        assert!(
                            lo >= -1e-10,
                            "Theta lost PSD: {lo} ({dist}, seed {seed}, k {k})"
                        );
                        assert!(
                            hi < 4.0 / 3.0,
                            "Theta hit 4/3: {hi} ({dist}, seed {seed}, k {k})"
                        );
                    }
                    Err(_) => continue,
                }
            }
            checked += 1;
            if checked >= 200 {
                break 'outer;
            }
        }
    }
    println!("theta bounds over {checked} instances: min {worst_low:.3e}, max {worst_high:.6}");
    assert!(checked >= 190);
}
