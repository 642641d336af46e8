//! Default numerical tolerances and thresholds.
//!
//! Every default used by constructors, solvers, and certificate logic is
//! collected here so that tests and downstream callers can reference the
//! exact same values instead of re-typing literals.

/// Feasibility tolerance: a block vector is feasible when every block norm
/// satisfies `| ||x_i||^2 - 1 | <= FEASIBILITY_TOL`.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Maximum accepted relative asymmetry `max|A - A^T| / max|A|` before a
/// matrix is rejected; below it the matrix is silently symmetrized.
pub const ASYMMETRY_TOL: f64 = 1e-8;

/// Diagonal blocks of a whitened problem must equal the identity to within
/// this absolute entrywise tolerance.
pub const IDENTITY_DIAG_TOL: f64 = 1e-10;

/// Relative eigenvalue floor for positive-semidefiniteness checks: the
/// smallest eigenvalue must be `>= -PSD_EIG_TOL * ||A||_2`.
pub const PSD_EIG_TOL: f64 = 1e-8;

/// Block norms at or below this floor count as numerically zero and cannot
/// be normalized.
pub const ZERO_NORM_FLOOR: f64 = 1e-300;

/// Default iteration cap for the block power method.
pub const HORST_MAXITER: usize = 500;

/// Default relative-change stopping threshold for the block power method.
pub const HORST_REL_CHANGE_STOP: f64 = 1e-10;

/// Per-step monotonicity slack: the objective may decrease by at most this
/// much between consecutive block power iterations before it is counted as
/// a violation.
pub const MONOTONICITY_TOL: f64 = 1e-10;

/// Default stopping tolerance for the semidefinite relaxation solver.
pub const SDP_TOL: f64 = 1e-7;

/// Default iteration cap for the semidefinite relaxation solver.
pub const SDP_MAXITER: usize = 50_000;

/// Blocks of the leading SDP eigenvector with norm at or below this
/// threshold violate the extraction assumption.
pub const EXTRACTION_BLOCK_NORM_TOL: f64 = 1e-12;

/// A duality-gap candidate is flagged when the best local objective falls
/// below this fraction of the (residual-deflated) relaxation value.
pub const DUALITY_GAP_FACTOR: f64 = 0.99;

/// Local-convergence event: two local objectives must differ by at least
/// this fraction of the larger one ...
pub const LOCAL_CONVERGENCE_REL: f64 = 0.10;

/// ... and by at least this absolute amount.
pub const LOCAL_CONVERGENCE_ABS: f64 = 0.1;

/// Slack factor applied to a reported solver residual when certificate
/// quantities are compared against each other.
pub const RESIDUAL_INFLATION: f64 = 10.0;

/// The relaxation value must lie in `[m, m^2]` up to `PSI_RANGE_TOL_FACTOR
/// * m^2` of absolute slack.
pub const PSI_RANGE_TOL_FACTOR: f64 = 1e-6;

/// Orthonormality tolerance for deflation bases and canonical-set checks.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Default mixing weight of the random perturbation in the near-one-dimensional
/// correlation sampler.
pub const ONEDIM_EPSILON: f64 = 1e-3;

/// Number of restarts the kernel solver performs internally per canonical
/// set.
pub const KERNEL_RESTARTS: usize = 8;
