//! The block power method: local iterative maximization of the whitened
//! quadratic objective.
//!
//! Each iteration multiplies the current block vector by `A` and rescales
//! every block back to unit norm — a direct generalization of the power
//! iteration (which it reduces to for `m = 1`). For positive semidefinite
//! `A` the objective `x^T A x` is non-decreasing along iterations, and for
//! one-dimensional blocks the method degenerates to iterated sign updates,
//! the classical local search for binary quadratic optimization.
//!
//! The method converges to first-order stationary points, which need not be
//! global maximizers; [`multi_restart`] draws many random starting points
//! and keeps the best outcome, and the certificate machinery in
//! [`crate::certificates`] judges how far that best outcome may still be
//! from the global optimum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::BlockVector;
use crate::error::{Error, Result};
use crate::model::QcqpProblem;
use crate::tolerances::{
    HORST_MAXITER, HORST_REL_CHANGE_STOP, MONOTONICITY_TOL, ZERO_NORM_FLOOR,
};
use crate::util::{derive_seed, gaussian_vector};

/// Options for the block power method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorstOptions {
    /// Iteration cap.
    pub maxiter: usize,
    /// Early stop once the relative iterate change `||x_old - x|| / ||x||`
    /// falls below this threshold.
    pub rel_change_stop: f64,
    /// Seed from which restart starting points are derived.
    pub seed: u64,
}

impl Default for HorstOptions {
    fn default() -> Self {
        Self { maxiter: HORST_MAXITER, rel_change_stop: HORST_REL_CHANGE_STOP, seed: 0 }
    }
}

impl HorstOptions {
    fn validate(&self) -> Result<()> {
        if self.maxiter == 0 {
            return Err(Error::InvalidInput("maxiter must be at least 1".into()));
        }
        if !(self.rel_change_stop > 0.0) {
            return Err(Error::InvalidInput("rel_change_stop must be positive".into()));
        }
        Ok(())
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Iteration number, starting at 1.
    pub iteration: usize,
    /// Objective after the iteration.
    pub objective: f64,
    /// `log10` of the relative iterate change (clamped at -300 when the
    /// change is exactly zero, so the record stays finite in JSON).
    pub log10_rel_change: f64,
}

/// Outcome of a single local solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalSolution {
    /// Final (feasible) iterate.
    pub x: BlockVector,
    /// Objective at the final iterate.
    pub objective: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Whether the relative-change stopping rule fired before `maxiter`.
    pub converged: bool,
    /// Steps on which the objective decreased by more than the monotonicity
    /// tolerance. Always zero in exact arithmetic for positive semidefinite
    /// problems; a nonzero count is a numerical-trouble diagnostic.
    pub monotonicity_violations: usize,
    /// Iterates that failed the feasibility check. Diagnostic, like
    /// `monotonicity_violations`.
    pub feasibility_violations: usize,
    /// Per-iteration convergence trace.
    pub trace: Vec<TraceRecord>,
}

/// Aggregate of [`multi_restart`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiRestartResult {
    /// Best local solution (ties broken by lowest restart index).
    pub best: LocalSolution,
    /// Final objectives of all restarts, in restart order.
    pub objectives: Vec<f64>,
    /// Restarts whose stopping rule fired before the iteration cap.
    pub converged_count: usize,
    /// Total monotonicity violations over all restarts.
    pub monotonicity_violations: usize,
    /// Total feasibility violations over all restarts.
    pub feasibility_violations: usize,
}

/// One iteration: multiply by `A`, then normalize every block.
///
/// Fails with [`Error::ZeroBlock`] if some block of `Ax` has norm below
/// `1e-300` (the method requires strictly positive block norms).
pub fn horst_step(problem: &QcqpProblem, x: &BlockVector) -> Result<BlockVector> {
    if x.structure() != problem.structure() {
        return Err(Error::InvalidInput("vector has a different block structure".into()));
    }
    let y = problem.matrix() * x.values();
    let mut out = BlockVector::new(y, problem.structure().clone())?;
    out.normalize_blocks()?;
    Ok(out)
}

/// Runs the block power method from a given starting point.
///
/// The starting point needs nonzero blocks but is not itself normalized or
/// recorded in the trace; iterates after the first step are always feasible.
/// The trace records the objective and the `log10` relative change per
/// iteration.
pub fn solve(problem: &QcqpProblem, x0: &BlockVector, opts: &HorstOptions) -> Result<LocalSolution> {
    opts.validate()?;
    if x0.structure() != problem.structure() {
        return Err(Error::InvalidInput("starting point has a different block structure".into()));
    }
    for i in 0..x0.structure().num_blocks() {
        if x0.block_norm(i) < ZERO_NORM_FLOOR {
            return Err(Error::InvalidInput(format!("starting point block {i} has zero norm")));
        }
    }

    let mut x = x0.clone();
    let mut objective = problem.objective(&x)?;
    // Monotonicity is defined along feasible iterates; an unnormalized
    // starting point has an objective on a different scale.
    let mut comparable = x.is_feasible_default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut monotonicity_violations = 0;
    let mut feasibility_violations = 0;

    for k in 1..=opts.maxiter {
        let next = horst_step(problem, &x).map_err(|e| match e {
            Error::ZeroBlock { block, .. } => Error::ZeroBlock { block, iteration: Some(k) },
            other => other,
        })?;
        let rel_change = (next.values() - x.values()).norm() / next.values().norm();
        let next_objective = problem.objective(&next)?;
        if comparable && next_objective < objective - MONOTONICITY_TOL {
            monotonicity_violations += 1;
        }
        if !next.is_feasible_default() {
            feasibility_violations += 1;
        }
        trace.push(TraceRecord {
            iteration: k,
            objective: next_objective,
            log10_rel_change: rel_change.max(1e-300).log10(),
        });
        x = next;
        objective = next_objective;
        comparable = true;
        iterations = k;
        if rel_change < opts.rel_change_stop {
            converged = true;
            break;
        }
    }

    Ok(LocalSolution {
        x,
        objective,
        iterations,
        converged,
        monotonicity_violations,
        feasibility_violations,
        trace,
    })
}

/// Runs [`solve`] from `restarts` random starting points and keeps the best.
///
/// Starting points have independent standard normal entries, normalized per
/// block. Each restart derives its own RNG stream from `(opts.seed, restart
/// index)`, so the result does not depend on scheduling order and is
/// reproducible bit-for-bit for a fixed seed.
pub fn multi_restart(
    problem: &QcqpProblem,
    restarts: usize,
    opts: &HorstOptions,
) -> Result<MultiRestartResult> {
    opts.validate()?;
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }

    let structure = problem.structure().clone();
    let n = structure.total_dim();
    let mut solutions = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, r as u64));
            let mut x0 = BlockVector::new(gaussian_vector(&mut rng, n), structure.clone())
                .expect("dimensions match by construction");
            x0.normalize_blocks()?;
            solve(problem, &x0, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_index = 0;
    for (i, s) in solutions.iter().enumerate() {
        if s.objective > solutions[best_index].objective {
            best_index = i;
        }
    }
    let objectives: Vec<f64> = solutions.iter().map(|s| s.objective).collect();
    let converged_count = solutions.iter().filter(|s| s.converged).count();
    let monotonicity_violations = solutions.iter().map(|s| s.monotonicity_violations).sum();
    let feasibility_violations = solutions.iter().map(|s| s.feasibility_violations).sum();
    let best = solutions.swap_remove(best_index);

    Ok(MultiRestartResult {
        best,
        objectives,
        converged_count,
        monotonicity_violations,
        feasibility_violations,
    })
}
