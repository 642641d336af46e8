//! Acceptance gate for the whole crate.
//!
//! Each numbered criterion prints exactly one PASS/FAIL line (visible with
//! `--nocapture`); the test fails at the end if any criterion failed. All
//! tolerances are written out literally next to their checks. Seeds are
//! pinned: the statistical criteria (6, 7, 11) reproduce distributional
//! findings and are checked on fixed draws with generous margins.

use std::f64::consts::FRAC_2_PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use mcca::certificates::{extract_candidate, psi_range_check, relative_accuracy_bounds};
use mcca::generators::{random_gram, GeneratorKind, GeneratorSpec};
use mcca::harness::{
    run_experiment, run_restricted_space_protocol, synthetic_latent_views, ExperimentConfig,
    FrequencyTable, ProtocolOptions,
};
use mcca::horst::{multi_restart, HorstOptions};
use mcca::kernel::{build_deflated_matrix, primal_image, solve_k_sets, DualProblem, KernelSpec};
use mcca::sdp::solve_sdp;
use mcca::tolerances::{SDP_MAXITER, SDP_TOL};
use mcca::transform::{estimate_regularized_covariance, whiten};
use mcca::{BlockStructure, BlockVector, QcqpProblem, SumcorProblem};

#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn check(&mut self, number: usize, label: &str, ok: bool, detail: String) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {number:2} ({label}): {verdict} — {detail}");
        if !ok {
            self.failures.push(format!("criterion {number} ({label}): {detail}"));
        }
    }
}

fn opts(seed: u64) -> HorstOptions {
    HorstOptions { seed, ..HorstOptions::default() }
}

/// One fully solved random instance: local search, relaxation, extraction.
struct SolvedInstance {
    m: usize,
    best_local: f64,
    extracted: Option<f64>,
    psi: f64,
    l2_bound: f64,
    monotonicity_violations: usize,
    feasibility_violations: usize,
}

fn solve_instance(kind: GeneratorKind, m: usize, n_i: usize, seed: u64) -> SolvedInstance {
    let blocks = BlockStructure::uniform(m, n_i).unwrap();
    let c = GeneratorSpec::new(kind, blocks.clone(), seed).generate().unwrap();
    let problem = whiten(&SumcorProblem::new(c, blocks).unwrap()).unwrap().into_problem();
    let local = multi_restart(&problem, 1000, &opts(seed)).unwrap();
    let sol = solve_sdp(&problem, SDP_TOL, SDP_MAXITER).unwrap();
    let extracted = extract_candidate(&sol, &problem).ok().map(|(_, v)| v);
    SolvedInstance {
        m,
        best_local: local.best.objective,
        extracted,
        psi: sol.psi,
        l2_bound: mcca::certificates::l2_norm_bound(&problem),
        monotonicity_violations: local.monotonicity_violations,
        feasibility_violations: local.feasibility_violations,
    }
}

/// Largest objective over all feasible sign vectors of a one-dimensional
/// problem (the first sign is fixed by symmetry).
fn enumerate_signs(problem: &QcqpProblem) -> f64 {
    let m = problem.num_blocks();
    let structure = problem.structure().clone();
    let mut best = f64::NEG_INFINITY;
    for bits in 0..(1u64 << (m - 1)) {
        let mut x = DVector::from_element(m, 1.0);
        for j in 1..m {
            if bits >> (j - 1) & 1 == 1 {
                x[j] = -1.0;
            }
        }
        let v = BlockVector::new(x, structure.clone()).unwrap();
        best = best.max(problem.objective(&v).unwrap());
    }
    best
}

fn frequency_run(kind: GeneratorKind, m: usize, n_i: usize, seed: u64) -> FrequencyTable {
    run_experiment(&ExperimentConfig::new(kind, m, n_i, seed)).unwrap()
}

/// Counts increases along a sequence expected to be non-increasing.
fn inversions(seq: &[f64]) -> usize {
    seq.windows(2).filter(|w| w[1] > w[0]).count()
}

#[test]
fn acceptance() {
    let mut gate = Gate::default();

    // Criteria 1-3: 300 generated instances, 100 per sampler, m in {3, 5},
    // n_i in {1, 2, 3}; every instance must satisfy the sandwich property,
    // the relaxation-value range, and the bound ordering.
    let started = Instant::now();
    let combos = [(3, 1), (3, 2), (3, 3), (5, 1), (5, 2), (5, 3)];
    let kinds = [GeneratorKind::Gram, GeneratorKind::Spectrum, GeneratorKind::OneDim];
    let mut sandwich_violations = 0usize;
    let mut range_violations = 0usize;
    let mut ordering_violations = 0usize;
    let mut extraction_failures = 0usize;
    let mut worst_sandwich_margin = f64::NEG_INFINITY;
    let mut total_monotonicity = 0usize;
    let mut total_feasibility = 0usize;
    let mut count = 0usize;
    for (k, kind) in kinds.iter().enumerate() {
        for i in 0..100usize {
            let (m, n_i) = combos[i % combos.len()];
            let inst = solve_instance(*kind, m, n_i, 9000 + (k * 100 + i) as u64);
            count += 1;
            total_monotonicity += inst.monotonicity_violations;
            total_feasibility += inst.feasibility_violations;

            let slack = 10.0 * SDP_TOL;
            worst_sandwich_margin = worst_sandwich_margin.max(inst.best_local - inst.psi);
            if inst.best_local > inst.psi + slack {
                sandwich_violations += 1;
            }
            match inst.extracted {
                Some(v) => {
                    worst_sandwich_margin = worst_sandwich_margin.max(v - inst.psi);
                    if v > inst.psi + slack {
                        sandwich_violations += 1;
                    }
                }
                None => extraction_failures += 1,
            }
            // criterion 2: m <= psi <= m^2 within 1e-6 * m^2
            if !psi_range_check(inst.psi, inst.m) {
                range_violations += 1;
            }
            // criterion 3: (2/pi) psi <= improved <= psi, psi <= m ||A||_2
            let bounds = relative_accuracy_bounds(inst.psi.max(inst.m as f64), inst.m).unwrap();
            if bounds.improved < bounds.base - 1e-9
                || bounds.improved > inst.psi.max(inst.m as f64) + 1e-9
                || inst.psi > inst.l2_bound + slack
            {
                ordering_violations += 1;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    gate.check(
        1,
        "sandwich property",
        sandwich_violations == 0 && extraction_failures == 0 && elapsed < 1800.0,
        format!(
            "{count} instances, {sandwich_violations} violations of objective <= psi + 1e-6, \
             {extraction_failures} extraction failures, worst objective - psi = {worst_sandwich_margin:.2e}, \
             {elapsed:.0}s (< 1800s)"
        ),
    );
    gate.check(
        2,
        "relaxation-value range",
        range_violations == 0,
        format!("{count} instances, {range_violations} outside [m, m^2] at tolerance 1e-6 * m^2"),
    );
    gate.check(
        3,
        "bound ordering",
        ordering_violations == 0,
        format!(
            "{count} instances, {ordering_violations} violations of \
             (2/pi) psi <= improved <= psi <= m * ||A||_2 + 1e-6"
        ),
    );

    // Criterion 4: improved-bound constant at m = 3, psi = 9.
    let bounds = relative_accuracy_bounds(9.0, 3).unwrap();
    let ratio = bounds.improved / bounds.base;
    gate.check(
        4,
        "improved-bound constant",
        (1.05..=1.06).contains(&ratio),
        format!("improved/base = {ratio:.6} at m=3, psi=9 (required within [1.05, 1.06])"),
    );

    // Criterion 5: brute-force oracle on 50 one-dimensional instances,
    // m in 3..=12.
    let mut oracle_in_sandwich = 0usize;
    let mut oracle_matches = 0usize;
    for i in 0..50u64 {
        let m = 3 + (i as usize % 10);
        let blocks = BlockStructure::uniform(m, 1).unwrap();
        let c = random_gram(m, 1000 + i).unwrap();
        let problem = whiten(&SumcorProblem::new(c, blocks).unwrap()).unwrap().into_problem();
        let exact = enumerate_signs(&problem);
        let psi = solve_sdp(&problem, SDP_TOL, SDP_MAXITER).unwrap().psi;
        if exact >= FRAC_2_PI * psi - 1e-6 && exact <= psi + 1e-6 {
            oracle_in_sandwich += 1;
        }
        let local = multi_restart(&problem, 1000, &opts(i)).unwrap();
        total_monotonicity += local.monotonicity_violations;
        total_feasibility += local.feasibility_violations;
        if exact - local.best.objective <= 1e-9 {
            oracle_matches += 1;
        }
    }
    gate.check(
        5,
        "brute-force oracle",
        oracle_in_sandwich == 50 && oracle_matches >= 48,
        format!(
            "{oracle_in_sandwich}/50 enumeration optima inside [(2/pi) psi - 1e-6, psi + 1e-6], \
             {oracle_matches}/50 matched by 1000-restart local search within 1e-9 (need >= 48)"
        ),
    );

    // Criteria 6-7: event frequencies at 100 trials x 1000 restarts.
    let started = Instant::now();
    let seed = 20260817;
    let gram = [
        frequency_run(GeneratorKind::Gram, 5, 1, seed),
        frequency_run(GeneratorKind::Gram, 5, 2, seed),
        frequency_run(GeneratorKind::Gram, 5, 3, seed),
    ];
    let spectrum = [
        frequency_run(GeneratorKind::Spectrum, 5, 1, seed),
        frequency_run(GeneratorKind::Spectrum, 5, 2, seed),
        frequency_run(GeneratorKind::Spectrum, 5, 3, seed),
    ];
    let onedim3 = frequency_run(GeneratorKind::OneDim, 5, 3, seed);
    let gram_m3 = frequency_run(GeneratorKind::Gram, 3, 1, seed);
    let elapsed = started.elapsed().as_secs_f64();

    let dg5 = gram[0].freq.duality_gap;
    let dg3 = gram_m3.freq.duality_gap;
    gate.check(
        6,
        "duality-gap frequency",
        (0.05..=0.29).contains(&dg5) && (0.0..=0.18).contains(&dg3) && elapsed < 1200.0,
        format!(
            "m=5: {dg5:.2} (required 0.17 +- 0.12), m=3: {dg3:.2} (required 0.09 +- 0.09), \
             {elapsed:.0}s (< 1200s)"
        ),
    );

    let gram_dg: Vec<f64> = gram.iter().map(|t| t.freq.duality_gap).collect();
    let gram_lc: Vec<f64> = gram.iter().map(|t| t.freq.local_convergence).collect();
    let spec_dg: Vec<f64> = spectrum.iter().map(|t| t.freq.duality_gap).collect();
    let spec_lc: Vec<f64> = spectrum.iter().map(|t| t.freq.local_convergence).collect();
    let strict = gram_dg[2] < gram_dg[0]
        && gram_lc[2] < gram_lc[0]
        && spec_dg[2] < spec_dg[0]
        && spec_lc[2] < spec_lc[0]
        && onedim3.freq.duality_gap > gram_dg[2];
    let monotone = inversions(&gram_dg) <= 1 && inversions(&spec_dg) <= 1;
    let blb_zero = gram[1..]
        .iter()
        .chain(&spectrum[1..])
        .chain(std::iter::once(&onedim3))
        .all(|t| t.freq.below_lower_bound == 0.0);
    gate.check(
        7,
        "structural trend",
        strict && monotone && blb_zero,
        format!(
            "duality gap by n_i: gram {gram_dg:.2?}, spectrum {spec_dg:.2?}, \
             one-dimensional coupling at n_i=3: {:.2} (> gram {:.2}); \
             local convergence n_i=3 < n_i=1: gram {:.2} < {:.2}, spectrum {:.2} < {:.2}; \
             below-lower-bound zero on all n_i >= 2 runs: {blb_zero}",
            onedim3.freq.duality_gap, gram_dg[2], gram_lc[2], gram_lc[0], spec_lc[2], spec_lc[0]
        ),
    );

    // Criterion 8: monotonicity and feasibility across every run above.
    for table in gram.iter().chain(&spectrum).chain([&onedim3, &gram_m3]) {
        for trial in &table.trials {
            total_monotonicity += trial.monotonicity_violations;
            total_feasibility += trial.feasibility_violations;
        }
    }
    gate.check(
        8,
        "monotonicity and feasibility",
        total_monotonicity == 0 && total_feasibility == 0,
        format!(
            "{total_monotonicity} monotonicity and {total_feasibility} feasibility violations \
             beyond 1e-10 across all local solves in criteria 1-7"
        ),
    );

    // Criterion 9: deflation orthonormality at k=3, kappa=0.1.
    let views = synthetic_latent_views(3, 4, 30, 2, 0.5, 77).unwrap();
    let dual = DualProblem::from_views(&KernelSpec::Rbf { sigma: 2.0 }, &views, 0.1).unwrap();
    let set = solve_k_sets(&dual, 3, &opts(5)).unwrap();
    let mut worst_orth = 0.0f64;
    for i in 0..3 {
        let z = dual.factor(i) * set.y(i);
        let gram_z = z.transpose() * &z;
        worst_orth = worst_orth.max((gram_z - DMatrix::<f64>::identity(3, 3)).abs().max());
    }
    let z_blocks: Vec<DMatrix<f64>> = (0..3).map(|i| set.z(i).clone()).collect();
    let deflated = build_deflated_matrix(&dual, &z_blocks).unwrap();
    let min_eig = SymmetricEigen::new(deflated.matrix().clone()).eigenvalues.min();
    let eig_floor = -1e-8 * deflated.spectral_norm();
    gate.check(
        9,
        "deflation orthonormality",
        worst_orth <= 1e-8 && min_eig >= eig_floor,
        format!(
            "max |Y^T Ktilde^2 Y - I| = {worst_orth:.2e} (<= 1e-8), deflated matrix min \
             eigenvalue {min_eig:.2e} (>= {eig_floor:.2e})"
        ),
    );

    // Criterion 10: linear-kernel solution matches the primal local optimum
    // on the empirical covariance (s = 200 observations, N = 9).
    let views = synthetic_latent_views(3, 3, 200, 2, 1.0, 99).unwrap();
    let dual = DualProblem::from_views(&KernelSpec::Linear, &views, 1e-3).unwrap();
    let set = solve_k_sets(&dual, 1, &opts(7)).unwrap();
    let empirical = estimate_regularized_covariance(&views, 0.0).unwrap();
    let structure = BlockStructure::uniform(3, 3).unwrap();
    let mut w_all = DVector::zeros(9);
    for (i, view) in views.iter().enumerate() {
        let w = primal_image(view, &set.y(i).column(0).into_owned()).unwrap();
        w_all.rows_mut(3 * i, 3).copy_from(&w);
    }
    let dual_sumcor =
        empirical.sum_correlations(&BlockVector::new(w_all, structure).unwrap()).unwrap();
    let whitening = whiten(&empirical).unwrap();
    let local = multi_restart(whitening.problem(), 1000, &opts(13)).unwrap();
    let primal_sumcor = (local.best.objective - 3.0) / 2.0;
    let diff = (dual_sumcor - primal_sumcor).abs();
    gate.check(
        10,
        "kernel/primal consistency",
        diff <= 1e-3,
        format!("dual {dual_sumcor:.6} vs primal {primal_sumcor:.6}, |diff| = {diff:.2e} (<= 1e-3)"),
    );

    // Criterion 11: restricted-space generalization. Views are scaled so the
    // ridge parameter sweeps across the data spectrum; see the user guide's
    // experiments chapter for the reasoning.
    let mut views = synthetic_latent_views(5, 100, 150, 2, 2.0, 31).unwrap();
    let scale = 1.0 / (2.0 * 125.0f64.sqrt());
    for v in &mut views {
        *v *= scale;
    }
    let gammas = [0.1, 0.5, 0.9];
    let kappas = [0.05, 0.2];
    let grid =
        run_restricted_space_protocol(&views, &gammas, &kappas, 4, 31, &ProtocolOptions::default())
            .unwrap();
    let mut cells_ok = true;
    let mut min_margin = f64::INFINITY;
    for gi in 0..gammas.len() {
        for ki in 0..kappas.len() {
            let margin = grid.train[gi][ki] - grid.test[gi][ki];
            min_margin = min_margin.min(margin);
            cells_ok &= margin >= 0.0;
        }
    }
    let column_gap = |gi: usize| -> f64 {
        (0..kappas.len()).map(|ki| grid.train[gi][ki] - grid.test[gi][ki]).sum::<f64>()
            / kappas.len() as f64
    };
    let gap_low = column_gap(0);
    let gap_high = column_gap(2);
    gate.check(
        11,
        "restricted-space generalization",
        cells_ok && gap_high <= 0.5 * gap_low,
        format!(
            "train >= test in all cells (min margin {min_margin:.3}), train-test gap \
             {gap_high:.3} at gamma=0.9 vs {gap_low:.3} at gamma=0.1 (required <= half)"
        ),
    );

    assert!(
        gate.failures.is_empty(),
        "acceptance criteria failed:\n{}",
        gate.failures.join("\n")
    );
}
