//! First-order solver for the semidefinite relaxation of the whitened
//! problem.
//!
//! Dropping the rank-one constraint from `max x^T A x` over feasible block
//! vectors gives the semidefinite program
//!
//! ```text
//! maximize    trace(A X)
//! subject to  trace(B_i X) = 1   (B_i selects diagonal block i)
//!             X  positive semidefinite,
//! ```
//!
//! whose optimum `psi` upper-bounds the quadratic optimum and feeds every
//! certificate in [`crate::certificates`].
//!
//! The solver is an operator-splitting (ADMM) scheme built from the two
//! cheap projections this feasible set offers: the affine set `{trace of
//! each diagonal block = 1}` has the closed-form projection that shifts each
//! diagonal block by `(1 - trace) / n_i * I`, and the PSD cone is projected
//! by eigendecomposition with negative-eigenvalue clipping. Each sweep takes
//! a gradient step of size `1/||A||_2` on `trace(A X)` inside the affine
//! projection, then reconciles with the cone projection through scaled dual
//! variables, with over-relaxation for speed. No external conic solver is
//! involved; one eigendecomposition per iteration is affordable at the
//! dimensions this crate targets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{serde_matrix, serde_vector};
use crate::model::QcqpProblem;

/// Over-relaxation factor; values in (1, 2) typically accelerate ADMM.
const RELAXATION: f64 = 1.6;

/// Solution of the semidefinite relaxation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    /// The PSD optimizer (the cone-feasible iterate; its diagonal block
    /// traces equal 1 within `primal_residual`).
    #[serde(with = "serde_matrix")]
    pub x: DMatrix<f64>,
    /// Relaxation value `trace(A X)`.
    pub psi: f64,
    /// Eigenvalues of `x` in descending order (nonnegative by construction).
    #[serde(with = "serde_vector")]
    pub eigenvalues: DVector<f64>,
    /// Matching eigenvectors, one per column, each sign-fixed so its first
    /// component larger than `1e-12` in magnitude is positive.
    #[serde(with = "serde_matrix")]
    pub eigenvectors: DMatrix<f64>,
    /// Maximum constraint violation of `x`: the worst diagonal-block trace
    /// deviation, the total trace deviation, and the splitting consensus gap,
    /// whichever is largest.
    pub primal_residual: f64,
    /// Iterations performed.
    pub iterations: usize,
}

/// Projects onto the affine set `{trace of each diagonal block = 1}`.
fn project_affine(m: &mut DMatrix<f64>, problem: &QcqpProblem) {
    let structure = problem.structure();
    for i in 0..structure.num_blocks() {
        let off = structure.offset(i);
        let n_i = structure.size(i);
        let mut trace = 0.0;
        for d in 0..n_i {
            trace += m[(off + d, off + d)];
        }
        let shift = (1.0 - trace) / n_i as f64;
        for d in 0..n_i {
            m[(off + d, off + d)] += shift;
        }
    }
}

/// Worst diagonal-block trace deviation from 1.
fn trace_violation(m: &DMatrix<f64>, problem: &QcqpProblem) -> f64 {
    let structure = problem.structure();
    let mut worst = 0.0f64;
    for i in 0..structure.num_blocks() {
        let off = structure.offset(i);
        let mut trace = 0.0;
        for d in 0..structure.size(i) {
            trace += m[(off + d, off + d)];
        }
        worst = worst.max((trace - 1.0).abs());
    }
    worst
}

/// Largest absolute entry of `a - b`.
fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Projects onto the PSD cone, returning the projection together with its
/// (clipped) eigendecomposition.
fn project_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = crate::util::symmetrize(m);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let mut projected = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = clipped[k];
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            // projected += lambda * v v^T, lower triangle then mirror
            for c in 0..n {
                let vc = v[c] * lambda;
                for r in c..n {
                    projected[(r, c)] += v[r] * vc;
                }
            }
        }
    }
    for c in 0..n {
        for r in (c + 1)..n {
            projected[(c, r)] = projected[(r, c)];
        }
    }
    (projected, clipped, eig.eigenvectors)
}

/// Solves the relaxation to the requested tolerance.
///
/// Stops when the diagonal-block traces, the consensus gap between the two
/// projection iterates, and the successive change all fall below `tol`;
/// fails with [`Error::NotConverged`] carrying the last residual once
/// `maxiter` is exhausted. The reported matrix is the cone-feasible iterate:
/// exactly PSD, with affine violations folded into `primal_residual`.
pub fn solve_sdp(problem: &QcqpProblem, tol: f64, maxiter: usize) -> Result<SdpSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    if maxiter == 0 {
        return Err(Error::InvalidInput("maxiter must be at least 1".into()));
    }

    let structure = problem.structure();
    let n = structure.total_dim();
    let rho = problem.spectral_norm().max(f64::MIN_POSITIVE);
    let gradient_step = problem.matrix() / rho;

    // start from the feasible point blkdiag(I / n_i)
    let mut z = DMatrix::<f64>::zeros(n, n);
    for i in 0..structure.num_blocks() {
        let off = structure.offset(i);
        let n_i = structure.size(i);
        for d in 0..n_i {
            z[(off + d, off + d)] = 1.0 / n_i as f64;
        }
    }
    let mut u = DMatrix::<f64>::zeros(n, n);

    let mut residual = f64::INFINITY;
    for iteration in 1..=maxiter {
        // affine half-step on the ascent direction
        let mut x = &z - &u + &gradient_step;
        project_affine(&mut x, problem);

        // over-relaxation, cone half-step, dual update
        let x_hat = &x * RELAXATION + &z * (1.0 - RELAXATION);
        let (z_next, _, _) = project_psd(&(&x_hat + &u));
        u += &x_hat - &z_next;

        let consensus_gap = max_abs_diff(&x, &z_next);
        let z_change = max_abs_diff(&z_next, &z);
        let affine_gap = trace_violation(&z_next, problem);
        // per-block trace errors can align (symmetric instances), so the
        // total trace is held to the same tolerance as each block
        let total_gap = (z_next.trace() - problem.num_blocks() as f64).abs();
        z = z_next;
        residual = consensus_gap.max(affine_gap).max(total_gap);

        if consensus_gap <= tol && affine_gap <= tol && z_change <= tol && total_gap <= tol {
            return Ok(finalize(problem, z, residual, iteration));
        }
    }

    Err(Error::NotConverged { iterations: maxiter, residual })
}

/// Assembles the solution report from the final cone-feasible iterate.
fn finalize(
    problem: &QcqpProblem,
    z: DMatrix<f64>,
    split_residual: f64,
    iterations: usize,
) -> SdpSolution {
    let (z, mut eigenvalues, mut eigenvectors) = project_psd(&z);
    let n = z.nrows();

    // sort eigenpairs by descending eigenvalue
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());
    let sorted_values = DVector::from_fn(n, |k, _| eigenvalues[order[k]]);
    let mut sorted_vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        sorted_vectors.set_column(k, &eigenvectors.column(src));
    }
    eigenvalues = sorted_values;
    eigenvectors = sorted_vectors;

    // deterministic sign fix: first component above threshold is positive
    for k in 0..n {
        let col = eigenvectors.column(k);
        let lead = col.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(0.0);
        if lead < 0.0 {
            eigenvectors.column_mut(k).neg_mut();
        }
    }

    let psi = (problem.matrix() * &z).trace();
    let total_trace_gap = (z.trace() - problem.num_blocks() as f64).abs();
    let primal_residual =
        split_residual.max(trace_violation(&z, problem)).max(total_trace_gap);

    SdpSolution { x: z, psi, eigenvalues, eigenvectors, primal_residual, iterations }
}
